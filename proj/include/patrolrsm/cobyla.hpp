#pragma once

#include <functional>
#include <span>
#include <vector>

namespace patrolrsm::optim {

/// Constrained Optimization BY Linear Approximation (Powell, 1994).
///
/// Minimizes f(x) subject to c_j(x) >= 0, j = 1..m, by linear interpolation of the
/// objective and constraints on a simplex of n+1 points whose size rho shrinks from
/// rho_begin to rho_end. Each trust-region step solves the linear subproblem with
/// the active-set method of Powell's TRSTLP.
struct CobylaOptions {
  double rho_begin = 0.5;
  double rho_end = 1e-6;
  int max_evaluations = 1000;
};

enum class CobylaStatus { Converged, MaxEvaluations, RoundingErrors };

struct CobylaResult {
  std::vector<double> x;
  double f = 0.0;
  double max_violation = 0.0;  ///< max_j max(0, -c_j(x))
  int evaluations = 0;
  CobylaStatus status = CobylaStatus::Converged;
};

/// Evaluates f(x) and writes the m constraint values into `constraints`.
using CobylaFunction = std::function<double(std::span<const double> x, std::span<double> constraints)>;

CobylaResult cobyla(const CobylaFunction& fn, int m, std::vector<double> x0,
                    const CobylaOptions& options);

}  // namespace patrolrsm::optim
