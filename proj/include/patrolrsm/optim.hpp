#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "patrolrsm/bioeconomics.hpp"

namespace patrolrsm::optim {

using Rng = std::mt19937_64;
using VectorFunction = std::function<double(std::span<const double>)>;

/// Feasibility tolerance applied to each (caller-normalized) constraint value.
inline constexpr double kFeasibilityTolerance = 1e-6;

/// A box-bounded, constrained problem over n variables.
///
/// When `transform` is set, the search runs over a raw vector y within `bounds`
/// and the objective and constraints see transform(y). This is how simplex
/// problems are expressed: optimize on the ray, evaluate on the simplex.
struct OptProblem {
  int n = 0;
  VectorFunction objective;
  bool maximize = false;
  std::vector<VectorFunction> inequality;  ///< g(x) >= 0
  std::vector<VectorFunction> equality;    ///< h(x) == 0
  std::vector<std::pair<double, double>> bounds;
  std::function<std::vector<double>(std::span<const double>)> transform;
  /// Draws a start point in raw coordinates. Defaults to uniform in the bounds.
  std::function<std::vector<double>(Rng&)> start_sampler;
  int max_evaluations = 0;  ///< 0 means 500 n

  void validate() const;
};

struct OptResult {
  std::vector<double> x;  ///< transformed point (the decision itself)
  double value = 0.0;     ///< objective at x, in the problem's own sense
  bool feasible = false;
  int evaluations = 0;
};

/// Local COBYLA run from raw start y0. Equalities become paired inequalities and
/// bounds become linear constraints.
OptResult minimize_constrained(const OptProblem& prob, std::span<const double> y0);

/// Best feasible result of n_starts local runs from sampled starts (lowest start
/// index wins ties). Start i is the i-th draw from Rng(seed), so a run with more
/// starts extends, rather than replaces, the one with fewer.
OptResult multistart_minimize(const OptProblem& prob, int n_starts, std::uint64_t seed);

/// Maximize or minimize `objective` over {x >= 0, sum x = budget} of dimension k.
OptProblem simplex_problem(int k, double budget, VectorFunction objective, bool maximize);

/// Projection used by simplex_problem: budget * max(y, 0) / sum, uniform if all zero.
std::vector<double> scale_to_simplex(std::span<const double> y, double budget);

struct ScalarMinimum {
  double x = 0.0;
  double f = 0.0;
};

/// Bounded Brent search (golden section with parabolic steps) plus explicit endpoint
/// checks; ties go to the lower x.
ScalarMinimum scalar_minimize(const std::function<double(double)>& f, double lo, double hi);

/// n points on [0,1]^k with one point per 1/n stratum in every coordinate.
std::vector<std::vector<double>> latin_hypercube(int n, int k, Rng& rng);

/// Latin hypercube rows rescaled to sum to `budget`.
std::vector<Allocation> latin_hypercube_simplex(int n, int k, double budget, std::uint64_t seed);

/// Uniform draw from the simplex scaled by `budget` (Dirichlet(1, ..., 1)).
std::vector<double> dirichlet_uniform(int k, double budget, Rng& rng);

/// Stable 64-bit mix (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;
std::uint64_t hash_values(std::span<const double> values, std::uint64_t seed) noexcept;

}  // namespace patrolrsm::optim
