#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace patrolrsm {

enum class Side { Blue, Red };

constexpr Side rival(Side side) noexcept { return side == Side::Blue ? Side::Red : Side::Blue; }
std::string_view to_string(Side side) noexcept;

/// Biology and market parameters of a single fishery.
struct FisheryParams {
  double r = 0.0;      ///< intrinsic growth rate
  double Z = 1.0;      ///< carrying capacity
  double q = 0.0;      ///< catchability coefficient
  double alpha = 1.0;  ///< growth-curvature exponent
  double gamma = 1.0;  ///< patchiness exponent
  double p = 0.0;      ///< price per metric ton

  /// Throws std::invalid_argument unless every field is strictly positive.
  void validate() const;

  /// Effort at which the Gordon-Schaefer stock collapses (r/q).
  double extinction_effort() const noexcept { return r / q; }
};

/// Linear patrol-cost coefficients shared by every fishery.
struct CostParams {
  double c_B = 0.0;      ///< Blue operating plus opportunity cost per unit effort
  double c_R = 0.0;      ///< Red operating plus opportunity cost per unit effort
  double beta_BR = 0.0;  ///< cost imposed on Blue fishermen per Red patrol
  double beta_RB = 0.0;  ///< cost imposed on Red fishermen per Blue patrol
  double beta_BB = 0.0;  ///< Blue patrols offsetting the Red effect
  double beta_RR = 0.0;  ///< Red patrols offsetting the Blue effect

  void validate() const;

  double base_cost(Side side) const noexcept { return side == Side::Blue ? c_B : c_R; }
  /// Cost per patrol that the rival's patrols impose on `side`.
  double deterrence(Side side) const noexcept { return side == Side::Blue ? beta_BR : beta_RB; }
  /// Offset per own patrol against the rival's deterrence.
  double offset(Side side) const noexcept { return side == Side::Blue ? beta_BB : beta_RR; }
};

struct Scenario {
  std::vector<FisheryParams> fisheries;
  CostParams costs;
  double blue_budget = 0.0;  ///< P_B_tot
  double red_budget = 0.0;   ///< P_R_tot
  double epsilon = 0.1;      ///< Red's tolerated relative shortfall

  std::size_t k() const noexcept { return fisheries.size(); }
  double budget(Side side) const noexcept { return side == Side::Blue ? blue_budget : red_budget; }
  void validate() const;
};

/// Nonnegative patrol vector summing to a budget.
class Allocation {
 public:
  static constexpr double kRelativeTolerance = 1e-6;

  /// Validates nonnegativity and the budget sum; throws std::invalid_argument.
  Allocation(std::vector<double> values, double budget);

  /// Clamps negatives to zero and rescales onto the budget simplex.
  static Allocation from_weights(std::span<const double> weights, double budget);
  static Allocation uniform(std::size_t k, double budget);

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }
  double budget() const noexcept { return budget_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Allocation&, const Allocation&) = default;

 private:
  std::vector<double> values_;
  double budget_;
};

/// True when every entry is >= 0 and the sum matches `budget` to `rel_tol`.
bool is_feasible_allocation(std::span<const double> values, double budget,
                            double rel_tol = Allocation::kRelativeTolerance);

struct FishingLevels {
  double blue = 0.0;
  double red = 0.0;

  double of(Side side) const noexcept { return side == Side::Blue ? blue : red; }
  double total() const noexcept { return blue + red; }
};

/// dx/dt = r x (1 - x/Z)^alpha - q x^gamma F.
///
/// Throws std::domain_error when x > Z and alpha is not an integer.
double growth_rate(double biomass, double effort, const FisheryParams& fp);

/// Largest root of growth_rate(x, F) = 0 in (0, Z], or 0 when the stock collapses.
///
/// Roots satisfy F = h(x) with h(x) = (r/q) (1 - x/Z)^alpha x^(1-gamma), which is
/// log-concave on (0, Z) and peaks at x* = (1-gamma) Z / (1-gamma+alpha) for
/// gamma < 1 (x* = 0 otherwise). The largest root is therefore the unique root of
/// the decreasing branch on [x*, Z], provided F <= h(x*).
double steady_state_biomass(double effort, const FisheryParams& fp);

/// Effort-balance curve h(x) above; total effort that holds the stock at `biomass`.
double sustaining_effort(double biomass, const FisheryParams& fp);

/// Biomass at which sustaining_effort peaks.
double peak_sustaining_biomass(const FisheryParams& fp) noexcept;

/// psi = c + max(0, beta_rival * P_rival - beta_own * P_own) for the given side.
double unit_cost(double own_patrols, double rival_patrols, const CostParams& cp, Side side);

/// Patrol-driven surcharge max(0, beta_rival * P_rival - beta_own * P_own).
double patrol_surcharge(double own_patrols, double rival_patrols, const CostParams& cp,
                        Side side) noexcept;

/// Catch value per unit effort at the given biomass: p q x^gamma.
double catch_value(double biomass, const FisheryParams& fp);

/// (p q x~^gamma - psi_side) F_side with x~ the steady state of F_B + F_R.
double fishery_profit(const FishingLevels& levels, double blue_patrols, double red_patrols,
                      const FisheryParams& fp, const CostParams& cp, Side side);

}  // namespace patrolrsm
