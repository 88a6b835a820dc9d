#pragma once

#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace patrolrsm {

/// Full polynomial of a given total degree (all interaction terms) on inputs that
/// are mapped to [0, 1] by their bounds before evaluation.
struct PolynomialModel {
  int degree = 0;
  std::vector<std::pair<double, double>> input_bounds;
  std::vector<std::vector<int>> exponents;  ///< one exponent tuple per coefficient
  std::vector<double> coefficients;

  std::size_t inputs() const noexcept { return input_bounds.size(); }
  double predict(std::span<const double> x) const;
};

/// All exponent tuples of total degree <= `degree` in `n` variables, graded order.
std::vector<std::vector<int>> monomial_exponents(int n, int degree);

/// Minimum-norm least-squares fit (rank-deficient designs give zero weight to
/// directions the data cannot see).
PolynomialModel fit_polynomial(const std::vector<std::vector<double>>& x, std::span<const double> y,
                               int degree, std::vector<std::pair<double, double>> input_bounds);

/// 1 - SSE/SST; when SST is zero, 1 for a perfect fit and 0 otherwise.
double r_squared(std::span<const double> observed, std::span<const double> predicted);

void to_json(nlohmann::json& j, const PolynomialModel& m);
void from_json(const nlohmann::json& j, PolynomialModel& m);

}  // namespace patrolrsm
