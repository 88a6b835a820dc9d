#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "patrolrsm/bioeconomics.hpp"
#include "patrolrsm/polynomial.hpp"

namespace patrolrsm {

/// A surrogate whose held-out R^2 fell below the acceptance threshold.
class FitRejected : public std::runtime_error {
 public:
  FitRejected(const std::string& what, double r2) : std::runtime_error(what), r2_(r2) {}
  double r2() const noexcept { return r2_; }

 private:
  double r2_;
};

/// No start of the equilibrium search met the residual tolerance.
class NoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMinimumR2 = 0.98;

/// Effort cap used for every fishing-level search and DOE: twice r/q.
double effort_cap(const FisheryParams& fp) noexcept;

/// Exact best response of `side` to the rival's effort at unit cost psi.
/// Returns exactly 0 when the first unit of effort does not pay.
double best_response_for_cost(double other_effort, double psi, const FisheryParams& fp);

double best_response_fishing(double other_effort, double own_patrols, double rival_patrols,
                             const FisheryParams& fp, const CostParams& cp, Side side);

/// p q x~(F_other*)^gamma <= psi_side, with F_other* the rival's exact best response
/// to no fishing by `side`.
bool is_zero_fishing_optimal(double own_patrols, double rival_patrols, const FisheryParams& fp,
                             const CostParams& cp, Side side);

/// Polynomial best response over (F_other, own surcharge) behind an exact
/// first-unit-profitability gate.
///
/// The DOE runs over (F_other, P_own, P_rival); the patrols only reach the profit
/// through the side's unit cost, so the fit uses the patrol surcharge as its
/// second input. Gate-closed points are exactly zero and are not fit.
struct BestResponseModel {
  FisheryParams fishery;
  CostParams costs;
  Side side = Side::Blue;
  double F_max = 0.0;
  std::vector<std::pair<double, double>> input_bounds;  ///< F_other, P_own, P_rival
  PolynomialModel poly;
  double r2_in_sample = 1.0;
  double r2_held_out = 1.0;

  int degree() const noexcept { return poly.degree; }
  double predict(double other_effort, double own_patrols, double rival_patrols) const;
};

BestResponseModel fit_best_response_model(const FisheryParams& fp, const CostParams& cp, Side side,
                                          double own_patrol_max, double rival_patrol_max,
                                          int doe_size = 400, std::uint64_t seed = 0);

/// Fixed point of the two best-response models at the given patrols.
FishingLevels solve_fishing_equilibrium(double blue_patrols, double red_patrols,
                                        const BestResponseModel& blue, const BestResponseModel& red);

/// Monopoly effort and the resulting catch value, tabulated against unit cost.
struct MonopolyTable {
  double psi_lo = 0.0;
  double psi_hi = 0.0;
  std::vector<double> effort;
  std::vector<double> catch_value;

  static MonopolyTable build(const FisheryParams& fp, double psi_lo, double psi_hi, int points);
  double effort_at(double psi, const FisheryParams& fp) const;
  double catch_value_at(double psi, const FisheryParams& fp) const;
};

/// Equilibrium fishing levels of one fishery as a function of its two patrol counts.
struct FisheryEquilibrium {
  FisheryParams fishery;
  MonopolyTable monopoly;
  PolynomialModel blue;  ///< interior equilibrium over (surcharge_B, surcharge_R)
  PolynomialModel red;
  double r2_blue = 1.0;
  double r2_red = 1.0;
  int interior_points = 0;

  FishingLevels predict(double blue_patrols, double red_patrols, const CostParams& cp) const;
};

struct EquilibriumModel {
  CostParams costs;
  std::vector<FisheryEquilibrium> per_fishery;
  std::vector<std::pair<double, double>> input_bounds;  ///< [0, P_B_tot] x [0, P_R_tot]

  std::size_t k() const noexcept { return per_fishery.size(); }
  FishingLevels predict(std::size_t fishery, double blue_patrols, double red_patrols) const;
  double min_r2() const noexcept;
};

struct BestResponsePair {
  BestResponseModel blue;
  BestResponseModel red;
};

std::vector<BestResponsePair> fit_best_response_models(const Scenario& sc, int doe_size = 400,
                                                       std::uint64_t seed = 0);

EquilibriumModel fit_equilibrium_model(const Scenario& sc, const std::vector<BestResponsePair>& brms,
                                       int doe_size = 250, std::uint64_t seed = 0);

/// Both fits with default DOE sizes.
EquilibriumModel build_equilibrium_model(const Scenario& sc, std::uint64_t seed = 0);

/// Sum over fisheries of the side's profit at the predicted equilibrium levels.
double total_utility(const Allocation& blue, const Allocation& red, const Scenario& sc,
                     const EquilibriumModel& eq, Side side);

void to_json(nlohmann::json& j, const BestResponseModel& m);
void to_json(nlohmann::json& j, const FisheryEquilibrium& m);
void to_json(nlohmann::json& j, const EquilibriumModel& m);

}  // namespace patrolrsm
