#include "patrolrsm/bioeconomics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace patrolrsm {

std::string_view to_string(Side side) noexcept { return side == Side::Blue ? "blue" : "red"; }

void FisheryParams::validate() const {
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!(positive(r) && positive(Z) && positive(q) && positive(alpha) && positive(gamma) &&
        positive(p))) {
    throw std::invalid_argument("fishery parameters r, Z, q, alpha, gamma, p must be > 0");
  }
}

void CostParams::validate() const {
  for (double v : {c_B, c_R, beta_BR, beta_RB, beta_BB, beta_RR}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("cost parameters must be finite and nonnegative");
    }
  }
}

void Scenario::validate() const {
  if (fisheries.empty()) throw std::invalid_argument("scenario needs at least one fishery");
  for (const auto& f : fisheries) f.validate();
  costs.validate();
  if (!(blue_budget > 0.0) || !(red_budget > 0.0)) {
    throw std::invalid_argument("patrol budgets must be positive");
  }
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
}

// --- Allocation -----------------------------------------------------------

bool is_feasible_allocation(std::span<const double> values, double budget, double rel_tol) {
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) return false;
    sum += v;
  }
  return std::abs(sum - budget) <= rel_tol * std::max(1.0, std::abs(budget));
}

Allocation::Allocation(std::vector<double> values, double budget)
    : values_(std::move(values)), budget_(budget) {
  if (values_.empty()) throw std::invalid_argument("allocation must have at least one entry");
  if (!(budget_ > 0.0)) throw std::invalid_argument("allocation budget must be positive");
  if (!is_feasible_allocation(values_, budget_)) {
    throw std::invalid_argument("allocation entries must be >= 0 and sum to budget " +
                                std::to_string(budget_));
  }
}

Allocation Allocation::from_weights(std::span<const double> weights, double budget) {
  std::vector<double> v(weights.size());
  std::transform(weights.begin(), weights.end(), v.begin(),
                 [](double w) { return std::isfinite(w) ? std::max(0.0, w) : 0.0; });
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(sum > 0.0)) throw std::invalid_argument("cannot scale an all-zero weight vector");
  for (double& x : v) x *= budget / sum;
  return Allocation(std::move(v), budget);
}

Allocation Allocation::uniform(std::size_t k, double budget) {
  return Allocation(std::vector<double>(k, budget / static_cast<double>(k)), budget);
}

// --- Dynamics -------------------------------------------------------------

double growth_rate(double biomass, double effort, const FisheryParams& fp) {
  const double x = biomass;
  const double base = 1.0 - x / fp.Z;
  if (base < 0.0 && fp.alpha != std::floor(fp.alpha)) {
    throw std::domain_error("biomass above carrying capacity with non-integer alpha");
  }
  if (x == 0.0) return 0.0;
  return fp.r * x * std::pow(base, fp.alpha) - fp.q * std::pow(x, fp.gamma) * effort;
}

double peak_sustaining_biomass(const FisheryParams& fp) noexcept {
  if (fp.gamma >= 1.0) return 0.0;
  return (1.0 - fp.gamma) * fp.Z / (1.0 - fp.gamma + fp.alpha);
}

double sustaining_effort(double biomass, const FisheryParams& fp) {
  const double x = std::clamp(biomass, 0.0, fp.Z);
  if (x == 0.0) {
    if (fp.gamma < 1.0) return 0.0;
    if (fp.gamma == 1.0) return fp.r / fp.q;
    return std::numeric_limits<double>::infinity();
  }
  return fp.r / fp.q * std::pow(1.0 - x / fp.Z, fp.alpha) * std::pow(x, 1.0 - fp.gamma);
}

namespace {

// In u = 1 - x/Z the balance condition becomes
//   L(u) = log(r/q) + alpha log u + (1-gamma) log(Z (1-u)) - log F = 0,
// increasing on (0, u_peak].
struct BalanceInU {
  const FisheryParams& fp;
  double log_target;

  double value(double u) const {
    double v = std::log(fp.r / fp.q) + fp.alpha * std::log(u) - log_target;
    if (fp.gamma != 1.0) v += (1.0 - fp.gamma) * std::log(fp.Z * (1.0 - u));
    return v;
  }
  double slope(double u) const {
    double d = fp.alpha / u;
    if (fp.gamma != 1.0) d -= (1.0 - fp.gamma) / (1.0 - u);
    return d;
  }
};

}  // namespace

double steady_state_biomass(double effort, const FisheryParams& fp) {
  if (!(effort > 0.0)) return fp.Z;

  const double x_peak = peak_sustaining_biomass(fp);
  if (effort >= sustaining_effort(x_peak, fp)) return 0.0;

  const BalanceInU balance{fp, std::log(effort)};
  double lo = 0.0;  // L(lo) < 0 (L -> -inf as u -> 0)
  double hi = 1.0 - x_peak / fp.Z;
  if (hi >= 1.0) hi = 1.0;  // gamma >= 1: L(1) > 0 or +inf once past the collapse check

  // Gordon-Schaefer starting point, kept strictly inside the bracket.
  double u = std::clamp(std::pow(effort * fp.q / fp.r, 1.0 / fp.alpha), 1e-300, hi);
  if (u >= hi) u = 0.5 * hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double l = balance.value(u);
    if (l == 0.0) break;
    if (l < 0.0) lo = u; else hi = u;
    double next = u - l / balance.slope(u);
    if (!(next > lo && next < hi)) next = lo > 0.0 ? 0.5 * (lo + hi) : 0.5 * hi;
    if (std::abs(next - u) <= 1e-16 * std::max(u, 1e-300) || hi - lo <= 1e-15 * hi) {
      u = next;
      break;
    }
    u = next;
  }
  return std::clamp(fp.Z * (1.0 - u), 0.0, fp.Z);
}

// --- Costs and profits ----------------------------------------------------

double patrol_surcharge(double own_patrols, double rival_patrols, const CostParams& cp,
                        Side side) noexcept {
  return std::max(0.0, cp.deterrence(side) * rival_patrols - cp.offset(side) * own_patrols);
}

double unit_cost(double own_patrols, double rival_patrols, const CostParams& cp, Side side) {
  if (own_patrols < 0.0 || rival_patrols < 0.0) {
    throw std::invalid_argument("patrol counts must be nonnegative");
  }
  return cp.base_cost(side) + patrol_surcharge(own_patrols, rival_patrols, cp, side);
}

double catch_value(double biomass, const FisheryParams& fp) {
  const double x = std::clamp(biomass, 0.0, fp.Z);
  return fp.p * fp.q * std::pow(x, fp.gamma);
}

double fishery_profit(const FishingLevels& levels, double blue_patrols, double red_patrols,
                      const FisheryParams& fp, const CostParams& cp, Side side) {
  const double effort = levels.of(side);
  if (effort == 0.0) return 0.0;
  const double own = side == Side::Blue ? blue_patrols : red_patrols;
  const double other = side == Side::Blue ? red_patrols : blue_patrols;
  const double biomass = steady_state_biomass(levels.total(), fp);
  return (catch_value(biomass, fp) - unit_cost(own, other, cp, side)) * effort;
}

}  // namespace patrolrsm
