#include "patrolrsm/optim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

#include "patrolrsm/cobyla.hpp"

namespace patrolrsm::optim {

void OptProblem::validate() const {
  if (n < 1) throw std::invalid_argument("OptProblem: n must be >= 1");
  if (!objective) throw std::invalid_argument("OptProblem: objective is not set");
  if (bounds.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("OptProblem: need one bound interval per variable");
  }
  for (const auto& [lo, hi] : bounds) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
      throw std::invalid_argument("OptProblem: bounds must be nonempty intervals");
    }
  }
}

namespace {

double bound_scale(const std::pair<double, double>& b) {
  const double w = b.second - b.first;
  return std::isfinite(w) && w > 0.0 ? w : 1.0;
}

struct Evaluated {
  std::vector<double> x;
  double value = 0.0;
  bool feasible = false;
  double violation = 0.0;
};

Evaluated evaluate_point(const OptProblem& prob, std::span<const double> y) {
  Evaluated e;
  e.x = prob.transform ? prob.transform(y) : std::vector<double>(y.begin(), y.end());
  e.value = prob.objective(e.x);
  double worst = 0.0;
  for (const auto& g : prob.inequality) worst = std::max(worst, -g(e.x));
  for (const auto& h : prob.equality) worst = std::max(worst, std::abs(h(e.x)));
  for (int i = 0; i < prob.n; ++i) {
    const auto& b = prob.bounds[static_cast<std::size_t>(i)];
    const double s = bound_scale(b);
    const double yi = y[static_cast<std::size_t>(i)];
    if (std::isfinite(b.first)) worst = std::max(worst, (b.first - yi) / s);
    if (std::isfinite(b.second)) worst = std::max(worst, (yi - b.second) / s);
  }
  e.violation = std::isnan(worst) ? std::numeric_limits<double>::infinity() : worst;
  e.feasible = e.violation <= kFeasibilityTolerance && std::isfinite(e.value);
  return e;
}

}  // namespace

OptResult minimize_constrained(const OptProblem& prob, std::span<const double> y0) {
  prob.validate();
  if (y0.size() != static_cast<std::size_t>(prob.n)) {
    throw std::invalid_argument("minimize_constrained: start has wrong dimension");
  }
  std::vector<double> start(y0.begin(), y0.end());
  double min_width = std::numeric_limits<double>::infinity();
  for (int i = 0; i < prob.n; ++i) {
    const auto& b = prob.bounds[static_cast<std::size_t>(i)];
    start[static_cast<std::size_t>(i)] = std::clamp(start[static_cast<std::size_t>(i)], b.first, b.second);
    const double w = b.second - b.first;
    if (std::isfinite(w) && w > 0.0) min_width = std::min(min_width, w);
  }
  if (!std::isfinite(min_width)) {
    double mag = 1.0;
    for (double v : start) mag = std::max(mag, std::abs(v));
    min_width = mag;
  }

  int n_bound_constraints = 0;
  for (const auto& b : prob.bounds) {
    n_bound_constraints += std::isfinite(b.first) ? 1 : 0;
    n_bound_constraints += std::isfinite(b.second) ? 1 : 0;
  }
  const int m = static_cast<int>(prob.inequality.size() + 2 * prob.equality.size()) +
                n_bound_constraints;
  const double sign = prob.maximize ? -1.0 : 1.0;

  std::vector<double> x;
  const CobylaFunction fn = [&](std::span<const double> y, std::span<double> c) {
    if (prob.transform) {
      x = prob.transform(y);
    } else {
      x.assign(y.begin(), y.end());
    }
    std::size_t j = 0;
    for (const auto& g : prob.inequality) c[j++] = g(x);
    for (const auto& h : prob.equality) {
      const double v = h(x);
      c[j++] = v;
      c[j++] = -v;
    }
    for (int i = 0; i < prob.n; ++i) {
      const auto& b = prob.bounds[static_cast<std::size_t>(i)];
      const double s = bound_scale(b);
      const double yi = y[static_cast<std::size_t>(i)];
      if (std::isfinite(b.first)) c[j++] = (yi - b.first) / s;
      if (std::isfinite(b.second)) c[j++] = (b.second - yi) / s;
    }
    return sign * prob.objective(x);
  };

  CobylaOptions options;
  options.rho_begin = 0.2 * min_width;
  options.rho_end = 1e-7 * min_width;
  options.max_evaluations = prob.max_evaluations > 0 ? prob.max_evaluations : 500 * prob.n;
  const CobylaResult raw = cobyla(fn, m, start, options);

  // Final projection onto the box before the decision is reported.
  std::vector<double> y = raw.x;
  for (int i = 0; i < prob.n; ++i) {
    const auto& b = prob.bounds[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(i)] = std::clamp(y[static_cast<std::size_t>(i)], b.first, b.second);
  }
  Evaluated e = evaluate_point(prob, y);
  OptResult result;
  result.x = std::move(e.x);
  result.value = e.value;
  result.feasible = e.feasible;
  result.evaluations = raw.evaluations + 1;
  return result;
}

OptResult multistart_minimize(const OptProblem& prob, int n_starts, std::uint64_t seed) {
  prob.validate();
  if (n_starts < 1) throw std::invalid_argument("multistart_minimize: n_starts must be >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> starts;
  starts.reserve(static_cast<std::size_t>(n_starts));
  for (int s = 0; s < n_starts; ++s) {
    if (prob.start_sampler) {
      starts.push_back(prob.start_sampler(rng));
    } else {
      std::vector<double> y(static_cast<std::size_t>(prob.n));
      for (int i = 0; i < prob.n; ++i) {
        const auto& b = prob.bounds[static_cast<std::size_t>(i)];
        const double lo = std::isfinite(b.first) ? b.first : -1.0;
        const double hi = std::isfinite(b.second) ? b.second : lo + 2.0;
        y[static_cast<std::size_t>(i)] = std::uniform_real_distribution<double>(lo, hi)(rng);
      }
      starts.push_back(std::move(y));
    }
  }

  OptResult best;
  bool have = false;
  int total_evaluations = 0;
  for (const auto& y0 : starts) {
    OptResult r = minimize_constrained(prob, y0);
    total_evaluations += r.evaluations;
    if (!r.feasible) continue;
    const bool better = prob.maximize ? r.value > best.value : r.value < best.value;
    if (!have || better) {
      best = std::move(r);
      have = true;
    }
  }
  if (!have) {
    throw std::runtime_error("multistart_minimize: no feasible point found from any start");
  }
  best.evaluations = total_evaluations;
  return best;
}

std::vector<double> scale_to_simplex(std::span<const double> y, double budget) {
  std::vector<double> x(y.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    x[i] = std::isfinite(y[i]) ? std::max(0.0, y[i]) : 0.0;
    sum += x[i];
  }
  if (!(sum > 0.0)) {
    std::fill(x.begin(), x.end(), budget / static_cast<double>(x.size()));
    return x;
  }
  for (double& v : x) v *= budget / sum;
  return x;
}

OptProblem simplex_problem(int k, double budget, VectorFunction objective, bool maximize) {
  if (k < 1) throw std::invalid_argument("simplex_problem: k must be >= 1");
  if (!(budget > 0.0)) throw std::invalid_argument("simplex_problem: budget must be positive");
  OptProblem prob;
  prob.n = k;
  prob.objective = std::move(objective);
  prob.maximize = maximize;
  prob.bounds.assign(static_cast<std::size_t>(k), {0.0, budget});
  prob.transform = [budget](std::span<const double> y) { return scale_to_simplex(y, budget); };
  prob.start_sampler = [k, budget](Rng& rng) { return dirichlet_uniform(k, budget, rng); };
  return prob;
}

ScalarMinimum scalar_minimize(const std::function<double(double)>& f, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("scalar_minimize: need lo < hi");
  const double width = hi - lo;
  const auto in_unit = [&](double t) { return f(lo + t * width); };
  // 2^-29 relative tolerance in t is about 1e-8 (hi - lo) after the final interpolation.
  const auto [t, ft] = boost::math::tools::brent_find_minima(in_unit, 0.0, 1.0, 30);

  ScalarMinimum best{lo, f(lo)};
  const auto consider = [&best](double x, double fx) {
    if (fx < best.f || (fx == best.f && x < best.x)) best = {x, fx};
  };
  consider(lo + t * width, ft);
  consider(hi, f(hi));
  return best;
}

std::vector<std::vector<double>> latin_hypercube(int n, int k, Rng& rng) {
  if (n < 1 || k < 1) throw std::invalid_argument("latin_hypercube: need n >= 1 and k >= 1");
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(k)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int j = 0; j < k; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) {
      pts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          (perm[static_cast<std::size_t>(i)] + unit(rng)) / n;
    }
  }
  return pts;
}

std::vector<Allocation> latin_hypercube_simplex(int n, int k, double budget, std::uint64_t seed) {
  Rng rng(seed);
  auto raw = latin_hypercube(n, k, rng);
  std::vector<Allocation> out;
  out.reserve(raw.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& row : raw) {
    while (!(std::accumulate(row.begin(), row.end(), 0.0) > 0.0)) {
      for (double& v : row) v = unit(rng);
    }
    out.push_back(Allocation::from_weights(row, budget));
  }
  return out;
}

std::vector<double> dirichlet_uniform(int k, double budget, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(static_cast<std::size_t>(k));
  double sum = 0.0;
  do {
    sum = 0.0;
    for (double& v : w) {
      v = expo(rng);
      sum += v;
    }
  } while (!(sum > 0.0));
  for (double& v : w) v *= budget / sum;
  return w;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_values(std::span<const double> values, std::uint64_t seed) noexcept {
  std::uint64_t h = mix_seed(seed, values.size());
  for (double v : values) h = mix_seed(h, std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v));
  return h;
}

}  // namespace patrolrsm::optim
