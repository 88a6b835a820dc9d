#pragma once

// Brute-force reference computations that share no code path with the library
// beyond the model formulas themselves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "patrolrsm/bioeconomics.hpp"

namespace test_oracles {

/// Largest sign change of growth_rate on an n-point uniform grid, refined by bisection.
inline double largest_root_by_scan(double effort, const patrolrsm::FisheryParams& fp, int n) {
  const auto g = [&](double x) {
    return fp.r * x * std::pow(1.0 - x / fp.Z, fp.alpha) - fp.q * std::pow(x, fp.gamma) * effort;
  };
  if (effort <= 0.0) return fp.Z;
  for (int j = n - 1; j >= 1; --j) {
    const double x = fp.Z * j / n;
    if (g(x) > 0.0) {
      double lo = x, hi = fp.Z * (j + 1) / n;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return 0.0;
}

/// Profit of one side at total effort own + other, with the biomass from the scan oracle.
inline double profit_by_scan(double own, double other, double psi, const patrolrsm::FisheryParams& fp,
                             int n) {
  if (own == 0.0) return 0.0;
  const double x = largest_root_by_scan(own + other, fp, n);
  return (fp.p * fp.q * std::pow(x, fp.gamma) - psi) * own;
}

/// argmax over an n-point grid of [0, hi], refined by golden-section on the best cell.
inline double argmax_by_grid(const std::function<double(double)>& f, double hi, int n) {
  int best = 0;
  double fbest = f(0.0);
  for (int j = 1; j <= n; ++j) {
    const double v = f(hi * j / n);
    if (v > fbest) {
      fbest = v;
      best = j;
    }
  }
  double a = hi * std::max(0, best - 1) / n, b = hi * std::min(n, best + 1) / n;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (f(c) >= f(d)) b = d; else a = c;
  }
  const double x = 0.5 * (a + b);
  return f(x) >= fbest ? x : hi * best / n;
}

/// Best response at unit cost psi: grid argmax of the scan-oracle profit on [0, 2 r/q].
inline double best_response_by_grid(double other, double psi, const patrolrsm::FisheryParams& fp, int n_grid,
                                    int n_scan = 200) {
  const double hi = std::max(0.0, 2.0 * fp.r / fp.q - other);
  if (hi == 0.0) return 0.0;
  return argmax_by_grid([&](double f) { return profit_by_scan(f, other, psi, fp, n_scan); }, hi, n_grid);
}

/// Damped iteration F <- (1 - d) F + d BR(F_rival), Jacobi style, from (0, 0).
template <class BrBlue, class BrRed>
std::pair<double, double> damped_fixed_point(BrBlue br_blue, BrRed br_red, int iterations, double damping) {
  double fb = 0.0, fr = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nb = br_blue(fr), nr = br_red(fb);
    fb = (1.0 - damping) * fb + damping * nb;
    fr = (1.0 - damping) * fr + damping * nr;
  }
  return {fb, fr};
}

/// Least-squares stump over one feature with leaves of at least two points; first best threshold wins.
struct Stump {
  double threshold, left, right;
};

inline Stump best_stump(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  Stump best{0, 0, 0};
  double best_sse = INFINITY;
  for (std::size_t cut = 2; cut + 2 <= idx.size(); ++cut) {
    double lm = 0, rm = 0;
    for (std::size_t j = 0; j < cut; ++j) lm += y[idx[j]];
    for (std::size_t j = cut; j < idx.size(); ++j) rm += y[idx[j]];
    lm /= cut;
    rm /= static_cast<double>(idx.size() - cut);
    double sse = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) sse += std::pow(y[idx[j]] - (j < cut ? lm : rm), 2);
    if (sse < best_sse) {
      best_sse = sse;
      best = {0.5 * (x[idx[cut - 1]] + x[idx[cut]]), lm, rm};
    }
  }
  return best;
}

/// Pooled out-of-fold R^2 of a single full-rate stump, fold = i mod folds.
inline double stump_cv_r2(const std::vector<double>& x, const std::vector<double>& y, std::size_t folds) {
  std::vector<double> oof(x.size());
  for (std::size_t fold = 0; fold < folds; ++fold) {
    std::vector<double> tx, ty;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i % folds != fold) {
        tx.push_back(x[i]);
        ty.push_back(y[i]);
      }
    }
    const Stump s = best_stump(tx, ty);
    for (std::size_t i = fold; i < x.size(); i += folds) oof[i] = x[i] <= s.threshold ? s.left : s.right;
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sse += std::pow(y[i] - oof[i], 2);
    sst += std::pow(y[i] - mean, 2);
  }
  return 1.0 - sse / sst;
}

}  // namespace test_oracles
