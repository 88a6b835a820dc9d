#include "patrolrsm/polynomial.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace patrolrsm {

namespace {

void append_exponents(int n, int remaining, std::vector<int>& current,
                      std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == n - 1) {
    current.push_back(remaining);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current.push_back(e);
    append_exponents(n, remaining - e, current, out);
    current.pop_back();
  }
}

double scaled(double v, const std::pair<double, double>& b) {
  const double w = b.second - b.first;
  return w > 0.0 ? (v - b.first) / w : 0.0;
}

double monomial(std::span<const double> u, const std::vector<int>& e) {
  double t = 1.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (int p = 0; p < e[i]; ++p) t *= u[i];
  }
  return t;
}

}  // namespace

std::vector<std::vector<int>> monomial_exponents(int n, int degree) {
  if (n < 1 || degree < 0) throw std::invalid_argument("monomial_exponents: bad arguments");
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  for (int d = 0; d <= degree; ++d) append_exponents(n, d, current, out);
  return out;
}

double PolynomialModel::predict(std::span<const double> x) const {
  if (x.size() != input_bounds.size()) {
    throw std::invalid_argument("PolynomialModel::predict: wrong input dimension");
  }
  double u[8];
  if (x.size() > 8) throw std::invalid_argument("PolynomialModel: at most 8 inputs");
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = scaled(x[i], input_bounds[i]);
  const std::span<const double> us(u, x.size());
  double s = 0.0;
  for (std::size_t c = 0; c < coefficients.size(); ++c) s += coefficients[c] * monomial(us, exponents[c]);
  return s;
}

PolynomialModel fit_polynomial(const std::vector<std::vector<double>>& x, std::span<const double> y,
                               int degree, std::vector<std::pair<double, double>> input_bounds) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_polynomial: size mismatch");
  const int n = static_cast<int>(input_bounds.size());
  PolynomialModel m;
  m.degree = degree;
  m.input_bounds = std::move(input_bounds);
  m.exponents = monomial_exponents(n, degree);
  const auto terms = static_cast<Eigen::Index>(m.exponents.size());
  m.coefficients.assign(m.exponents.size(), 0.0);
  if (x.empty()) return m;

  Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), terms);
  Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
  std::vector<double> u(static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (x[r].size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("fit_polynomial: row has wrong dimension");
    }
    for (int i = 0; i < n; ++i) {
      u[static_cast<std::size_t>(i)] = scaled(x[r][static_cast<std::size_t>(i)], m.input_bounds[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index c = 0; c < terms; ++c) {
      a(static_cast<Eigen::Index>(r), c) = monomial(u, m.exponents[static_cast<std::size_t>(c)]);
    }
    b(static_cast<Eigen::Index>(r)) = y[r];
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(1e-12);
  const Eigen::VectorXd coef = cod.solve(b);
  for (Eigen::Index c = 0; c < terms; ++c) m.coefficients[static_cast<std::size_t>(c)] = coef(c);
  return m;
}

double r_squared(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.size() != predicted.size() || observed.empty()) {
    throw std::invalid_argument("r_squared: need equal, nonempty inputs");
  }
  double mean = 0.0;
  for (double v : observed) mean += v;
  mean /= static_cast<double>(observed.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    sse += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    sst += (observed[i] - mean) * (observed[i] - mean);
  }
  // Targets flat up to solver noise: R^2 is undefined, score the fit by its absolute accuracy.
  double scale = 0.0;
  for (double v : observed) scale = std::max(scale, std::abs(v));
  const auto n = static_cast<double>(observed.size());
  const double unit = std::max(1.0, scale);
  if (sst <= 1e-18 * unit * unit * n) return sse <= 1e-12 * unit * unit * n ? 1.0 : 0.0;
  return 1.0 - sse / sst;
}

void to_json(nlohmann::json& j, const PolynomialModel& m) {
  j = nlohmann::json{{"degree", m.degree},
                     {"input_bounds", m.input_bounds},
                     {"exponents", m.exponents},
                     {"coefficients", m.coefficients}};
}

void from_json(const nlohmann::json& j, PolynomialModel& m) {
  j.at("degree").get_to(m.degree);
  j.at("input_bounds").get_to(m.input_bounds);
  j.at("exponents").get_to(m.exponents);
  j.at("coefficients").get_to(m.coefficients);
}

}  // namespace patrolrsm
