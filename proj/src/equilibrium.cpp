#include "patrolrsm/equilibrium.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "patrolrsm/optim.hpp"

namespace patrolrsm {

double effort_cap(const FisheryParams& fp) noexcept { return 2.0 * fp.r / fp.q; }

// --- Exact best responses -------------------------------------------------

double best_response_for_cost(double other_effort, double psi, const FisheryParams& fp) {
  const double F_max = effort_cap(fp);
  const double F_o = std::max(0.0, other_effort);
  if (catch_value(steady_state_biomass(F_o, fp), fp) - psi <= 0.0) return 0.0;

  const double collapse = sustaining_effort(peak_sustaining_biomass(fp), fp);
  const double hi = std::min(F_max, collapse - F_o);
  if (!(hi > 0.0)) return 0.0;
  const auto profit = [&](double F) {
    return (catch_value(steady_state_biomass(F_o + F, fp), fp) - psi) * F;
  };

  // Coarse scan to pick the basin, then Brent inside the neighbouring cells.
  constexpr int kCells = 32;
  int best_cell = 0;
  double best_value = 0.0;
  for (int j = 1; j <= kCells; ++j) {
    const double v = profit(hi * j / kCells);
    if (v > best_value) {
      best_value = v;
      best_cell = j;
    }
  }
  const double a = hi * std::max(0, best_cell - 1) / kCells;
  const double b = hi * std::min(kCells, best_cell + 1) / kCells;
  const auto m = optim::scalar_minimize([&](double F) { return -profit(F); }, a, b);
  double best_F = hi * best_cell / kCells;
  if (-m.f > best_value) {
    best_value = -m.f;
    best_F = m.x;
  }
  return best_value > 0.0 ? best_F : 0.0;
}

double best_response_fishing(double other_effort, double own_patrols, double rival_patrols,
                             const FisheryParams& fp, const CostParams& cp, Side side) {
  return best_response_for_cost(other_effort, unit_cost(own_patrols, rival_patrols, cp, side), fp);
}

bool is_zero_fishing_optimal(double own_patrols, double rival_patrols, const FisheryParams& fp,
                             const CostParams& cp, Side side) {
  const double psi_own = unit_cost(own_patrols, rival_patrols, cp, side);
  const double psi_rival = unit_cost(rival_patrols, own_patrols, cp, rival(side));
  const double rival_alone = best_response_for_cost(0.0, psi_rival, fp);
  return catch_value(steady_state_biomass(rival_alone, fp), fp) - psi_own <= 0.0;
}

// --- Best-response surrogate ----------------------------------------------

double BestResponseModel::predict(double other_effort, double own_patrols, double rival_patrols) const {
  const double psi = unit_cost(own_patrols, rival_patrols, costs, side);
  const double F_o = std::clamp(other_effort, 0.0, F_max);
  if (catch_value(steady_state_biomass(F_o, fishery), fishery) - psi <= 0.0) return 0.0;
  const std::array<double, 2> u{F_o, psi - costs.base_cost(side)};
  return std::clamp(poly.predict(u), 0.0, F_max);
}

namespace {

bool is_held_out(std::size_t i) { return i % 5 == 4; }

}  // namespace

BestResponseModel fit_best_response_model(const FisheryParams& fp, const CostParams& cp, Side side,
                                          double own_patrol_max, double rival_patrol_max,
                                          int doe_size, std::uint64_t seed) {
  fp.validate();
  cp.validate();
  if (doe_size < 200) throw std::invalid_argument("fit_best_response_model: doe_size must be >= 200");

  BestResponseModel m;
  m.fishery = fp;
  m.costs = cp;
  m.side = side;
  m.F_max = effort_cap(fp);
  m.input_bounds = {{0.0, m.F_max}, {0.0, own_patrol_max}, {0.0, rival_patrol_max}};

  optim::Rng rng(seed);
  const auto unit = optim::latin_hypercube(doe_size, 3, rng);
  std::vector<std::array<double, 3>> pts(unit.size());
  std::vector<double> target(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    for (std::size_t d = 0; d < 3; ++d) {
      pts[i][d] = m.input_bounds[d].first + unit[i][d] * (m.input_bounds[d].second - m.input_bounds[d].first);
    }
    target[i] = best_response_fishing(pts[i][0], pts[i][1], pts[i][2], fp, cp, side);
  }

  std::vector<std::vector<double>> train_x;
  std::vector<double> train_y;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (is_held_out(i)) continue;
    const double psi = unit_cost(pts[i][1], pts[i][2], cp, side);
    if (catch_value(steady_state_biomass(pts[i][0], fp), fp) - psi <= 0.0) continue;
    train_x.push_back({pts[i][0], psi - cp.base_cost(side)});
    train_y.push_back(target[i]);
  }
  const std::vector<std::pair<double, double>> feature_bounds{
      {0.0, m.F_max}, {0.0, cp.deterrence(side) * rival_patrol_max}};

  // Marginal fisheries leave only a sliver of the box where fishing pays. Top the
  // training set up with a design drawn directly in that sliver's feature box.
  constexpr std::size_t kMinOpenPoints = 100;
  const double c = cp.base_cost(side);
  const double s_open = std::min(feature_bounds[1].second, catch_value(fp.Z, fp) - c);
  if (train_x.size() < kMinOpenPoints && s_open > 0.0) {
    double F_open = 0.0;  // largest rival effort at which the first unit still pays at base cost
    double lo = 0.0, hi = m.F_max;
    if (catch_value(steady_state_biomass(hi, fp), fp) > c) {
      F_open = hi;
    } else {
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (catch_value(steady_state_biomass(mid, fp), fp) > c ? lo : hi) = mid;
      }
      F_open = hi;
    }
    const auto extra = optim::latin_hypercube(doe_size / 2, 2, rng);
    for (const auto& u : extra) {
      const double F_o = u[0] * F_open;
      const double s = u[1] * s_open;
      if (catch_value(steady_state_biomass(F_o, fp), fp) - (c + s) <= 0.0) continue;
      train_x.push_back({F_o, s});
      train_y.push_back(best_response_for_cost(F_o, c + s, fp));
    }
  }

  for (int degree : {3, 4}) {
    m.poly = fit_polynomial(train_x, train_y, degree, feature_bounds);
    std::vector<double> obs_in, pred_in, obs_out, pred_out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double p = m.predict(pts[i][0], pts[i][1], pts[i][2]);
      (is_held_out(i) ? obs_out : obs_in).push_back(target[i]);
      (is_held_out(i) ? pred_out : pred_in).push_back(p);
    }
    m.r2_in_sample = r_squared(obs_in, pred_in);
    m.r2_held_out = r_squared(obs_out, pred_out);
    if (m.r2_held_out >= kMinimumR2) return m;
  }
  throw FitRejected(fmt::format("{} best-response surrogate rejected: held-out R^2 {:.4f} < {}",
                                to_string(side), m.r2_held_out, kMinimumR2),
                    m.r2_held_out);
}

// --- Equilibrium solve ----------------------------------------------------

namespace {

struct Residual {
  const BestResponseModel& blue;
  const BestResponseModel& red;
  double P_B;
  double P_R;

  std::array<double, 2> operator()(double F_B, double F_R) const {
    return {F_B - blue.predict(F_R, P_B, P_R), F_R - red.predict(F_B, P_R, P_B)};
  }
  static double norm2(const std::array<double, 2>& r) { return r[0] * r[0] + r[1] * r[1]; }
};

// Projected Levenberg-Marquardt with central-difference derivatives of the two
// best responses (each depends on one variable only).
std::pair<FishingLevels, double> levenberg_marquardt(const Residual& res, double F_max,
                                                     FishingLevels start) {
  double F_B = std::clamp(start.blue, 0.0, F_max);
  double F_R = std::clamp(start.red, 0.0, F_max);
  auto r = res(F_B, F_R);
  double f = Residual::norm2(r);
  double mu = 1e-3;
  const double h = 1e-6 * F_max;
  const double target = 1e-24 * F_max * F_max;

  const auto derivative = [&](auto&& g, double at) {
    const double lo = std::max(0.0, at - h), hi = std::min(F_max, at + h);
    return (g(hi) - g(lo)) / (hi - lo);
  };
  for (int iter = 0; iter < 200 && f > target; ++iter) {
    const double dB = derivative([&](double v) { return res.blue.predict(v, res.P_B, res.P_R); }, F_R);
    const double dR = derivative([&](double v) { return res.red.predict(v, res.P_R, res.P_B); }, F_B);
    // J = [[1, -dB], [-dR, 1]]
    const double j11 = 1.0, j12 = -dB, j21 = -dR, j22 = 1.0;
    const double g1 = j11 * r[0] + j21 * r[1];
    const double g2 = j12 * r[0] + j22 * r[1];
    const double a11 = j11 * j11 + j21 * j21, a12 = j11 * j12 + j21 * j22, a22 = j12 * j12 + j22 * j22;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      const double b11 = a11 * (1.0 + mu), b22 = a22 * (1.0 + mu);
      const double det = b11 * b22 - a12 * a12;
      if (det == 0.0) {
        mu *= 10.0;
        continue;
      }
      const double sB = -(b22 * g1 - a12 * g2) / det;
      const double sR = -(-a12 * g1 + b11 * g2) / det;
      const double nB = std::clamp(F_B + sB, 0.0, F_max);
      const double nR = std::clamp(F_R + sR, 0.0, F_max);
      const auto nr = res(nB, nR);
      const double nf = Residual::norm2(nr);
      if (nf < f) {
        F_B = nB;
        F_R = nR;
        r = nr;
        f = nf;
        mu = std::max(1e-12, mu / 3.0);
        improved = true;
        break;
      }
      mu *= 4.0;
    }
    if (!improved) break;
  }
  return {{F_B, F_R}, f};
}

// g(F_B) = F_B - BR_B(BR_R(F_B)) changes sign on [0, F_max]; bisect it.
std::pair<FishingLevels, double> bisect_composite(const Residual& res, double F_max) {
  const auto red_of = [&](double F_B) { return res.red.predict(F_B, res.P_R, res.P_B); };
  const auto g = [&](double F_B) { return F_B - res.blue.predict(red_of(F_B), res.P_B, res.P_R); };
  double lo = 0.0, hi = F_max;
  if (g(lo) >= 0.0) hi = lo;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * F_max; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  const FishingLevels levels{hi, red_of(hi)};
  return {levels, Residual::norm2(res(levels.blue, levels.red))};
}

}  // namespace

FishingLevels solve_fishing_equilibrium(double blue_patrols, double red_patrols,
                                        const BestResponseModel& blue, const BestResponseModel& red) {
  const FisheryParams& fp = blue.fishery;
  const CostParams& cp = blue.costs;
  const double F_max = std::max(blue.F_max, red.F_max);
  const bool blue_zero = is_zero_fishing_optimal(blue_patrols, red_patrols, fp, cp, Side::Blue);
  const bool red_zero = is_zero_fishing_optimal(red_patrols, blue_patrols, fp, cp, Side::Red);
  const double mono_B = blue.predict(0.0, blue_patrols, red_patrols);
  const double mono_R = red.predict(0.0, red_patrols, blue_patrols);

  // Corner equilibria: the fishing side plays its exact monopoly response.
  if (blue_zero || red_zero) {
    const double psi_B = unit_cost(blue_patrols, red_patrols, cp, Side::Blue);
    const double psi_R = unit_cost(red_patrols, blue_patrols, cp, Side::Red);
    const bool blue_fishes = blue_zero && red_zero ? psi_B <= psi_R : red_zero;
    return blue_fishes ? FishingLevels{best_response_for_cost(0.0, psi_B, fp), 0.0}
                       : FishingLevels{0.0, best_response_for_cost(0.0, psi_R, fp)};
  }

  const Residual res{blue, red, blue_patrols, red_patrols};
  const std::array<FishingLevels, 5> starts{{{0.0, 0.0},
                                             {0.5 * F_max, 0.5 * F_max},
                                             {mono_B, 0.0},
                                             {0.0, mono_R},
                                             {0.5 * mono_B, 0.5 * mono_R}}};
  const double tight = 1e-12 * F_max * F_max;
  const double tolerance = 1e-6 * F_max * F_max;
  std::pair<FishingLevels, double> best{{0.0, 0.0}, std::numeric_limits<double>::infinity()};
  for (const auto& s : starts) {
    auto candidate = levenberg_marquardt(res, F_max, s);
    if (candidate.second <= tight) return candidate.first;
    if (candidate.second < best.second) best = candidate;
  }
  if (best.second > tight) {
    auto candidate = bisect_composite(res, F_max);
    if (candidate.second < best.second) best = candidate;
  }
  if (best.second > tolerance) {
    throw NoConvergence(fmt::format(
        "fishing equilibrium not found at patrols ({}, {}): residual {:.3e} > {:.3e}", blue_patrols,
        red_patrols, best.second, tolerance));
  }
  return best.first;
}

// --- Equilibrium surrogate ------------------------------------------------

MonopolyTable MonopolyTable::build(const FisheryParams& fp, double psi_lo, double psi_hi, int points) {
  MonopolyTable t;
  t.psi_lo = psi_lo;
  t.psi_hi = psi_hi;
  if (!(psi_hi > psi_lo) || points < 2) return t;
  t.effort.resize(static_cast<std::size_t>(points));
  t.catch_value.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double psi = psi_lo + (psi_hi - psi_lo) * i / (points - 1);
    const double F = best_response_for_cost(0.0, psi, fp);
    t.effort[static_cast<std::size_t>(i)] = F;
    t.catch_value[static_cast<std::size_t>(i)] = patrolrsm::catch_value(steady_state_biomass(F, fp), fp);
  }
  return t;
}

namespace {

double interpolate(const std::vector<double>& v, double lo, double hi, double at) {
  const double pos = (at - lo) / (hi - lo) * static_cast<double>(v.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), v.size() - 2);
  const double t = pos - static_cast<double>(i);
  return v[i] + t * (v[i + 1] - v[i]);
}

}  // namespace

double MonopolyTable::effort_at(double psi, const FisheryParams& fp) const {
  if (effort.empty() || psi < psi_lo || psi > psi_hi) return best_response_for_cost(0.0, psi, fp);
  return interpolate(effort, psi_lo, psi_hi, psi);
}

double MonopolyTable::catch_value_at(double psi, const FisheryParams& fp) const {
  if (catch_value.empty() || psi < psi_lo || psi > psi_hi) {
    return patrolrsm::catch_value(steady_state_biomass(best_response_for_cost(0.0, psi, fp), fp), fp);
  }
  return interpolate(catch_value, psi_lo, psi_hi, psi);
}

FishingLevels FisheryEquilibrium::predict(double blue_patrols, double red_patrols,
                                          const CostParams& cp) const {
  const double psi_B = unit_cost(blue_patrols, red_patrols, cp, Side::Blue);
  const double psi_R = unit_cost(red_patrols, blue_patrols, cp, Side::Red);
  const bool blue_zero = monopoly.catch_value_at(psi_R, fishery) <= psi_B;
  const bool red_zero = monopoly.catch_value_at(psi_B, fishery) <= psi_R;
  if (blue_zero && red_zero) {
    return psi_B <= psi_R ? FishingLevels{monopoly.effort_at(psi_B, fishery), 0.0}
                          : FishingLevels{0.0, monopoly.effort_at(psi_R, fishery)};
  }
  if (blue_zero) return {0.0, monopoly.effort_at(psi_R, fishery)};
  if (red_zero) return {monopoly.effort_at(psi_B, fishery), 0.0};
  const double F_max = effort_cap(fishery);
  const std::array<double, 2> u{psi_B - cp.c_B, psi_R - cp.c_R};
  return {std::clamp(blue.predict(u), 0.0, F_max), std::clamp(red.predict(u), 0.0, F_max)};
}

FishingLevels EquilibriumModel::predict(std::size_t fishery, double blue_patrols,
                                        double red_patrols) const {
  return per_fishery.at(fishery).predict(blue_patrols, red_patrols, costs);
}

double EquilibriumModel::min_r2() const noexcept {
  double r2 = 1.0;
  for (const auto& f : per_fishery) r2 = std::min({r2, f.r2_blue, f.r2_red});
  return r2;
}

std::vector<BestResponsePair> fit_best_response_models(const Scenario& sc, int doe_size,
                                                       std::uint64_t seed) {
  sc.validate();
  std::vector<BestResponsePair> out;
  out.reserve(sc.k());
  for (std::size_t i = 0; i < sc.k(); ++i) {
    const auto& fp = sc.fisheries[i];
    out.push_back({fit_best_response_model(fp, sc.costs, Side::Blue, sc.blue_budget, sc.red_budget,
                                           doe_size, optim::mix_seed(seed, 2 * i)),
                   fit_best_response_model(fp, sc.costs, Side::Red, sc.red_budget, sc.blue_budget,
                                           doe_size, optim::mix_seed(seed, 2 * i + 1))});
  }
  return out;
}

EquilibriumModel fit_equilibrium_model(const Scenario& sc, const std::vector<BestResponsePair>& brms,
                                       int doe_size, std::uint64_t seed) {
  sc.validate();
  if (brms.size() != sc.k()) throw std::invalid_argument("fit_equilibrium_model: need one model pair per fishery");
  if (doe_size < 200) throw std::invalid_argument("fit_equilibrium_model: doe_size must be >= 200");
  const CostParams& cp = sc.costs;

  EquilibriumModel eq;
  eq.costs = cp;
  eq.input_bounds = {{0.0, sc.blue_budget}, {0.0, sc.red_budget}};
  const double psi_lo = std::min(cp.c_B, cp.c_R);
  const double psi_hi = std::max(cp.c_B + cp.beta_BR * sc.red_budget, cp.c_R + cp.beta_RB * sc.blue_budget);
  const std::vector<std::pair<double, double>> feature_bounds{{0.0, cp.beta_BR * sc.red_budget},
                                                              {0.0, cp.beta_RB * sc.blue_budget}};

  for (std::size_t f = 0; f < sc.k(); ++f) {
    FisheryEquilibrium fe;
    fe.fishery = sc.fisheries[f];
    // Above p q Z^gamma no one fishes, so the table stops there.
    const double psi_open = fe.fishery.p * fe.fishery.q * std::pow(fe.fishery.Z, fe.fishery.gamma);
    fe.monopoly = MonopolyTable::build(fe.fishery, psi_lo, std::min(psi_hi, psi_open), 1025);

    optim::Rng rng(optim::mix_seed(seed, 1000 + f));
    const auto unit = optim::latin_hypercube(doe_size, 2, rng);
    std::vector<std::array<double, 2>> patrols(unit.size());
    std::vector<FishingLevels> levels(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) {
      patrols[i] = {unit[i][0] * sc.blue_budget, unit[i][1] * sc.red_budget};
      levels[i] = solve_fishing_equilibrium(patrols[i][0], patrols[i][1], brms[f].blue, brms[f].red);
    }

    std::vector<std::vector<double>> train_x;
    std::vector<double> train_B, train_R;
    for (std::size_t i = 0; i < unit.size(); ++i) {
      if (is_held_out(i)) continue;
      const double psi_B = unit_cost(patrols[i][0], patrols[i][1], cp, Side::Blue);
      const double psi_R = unit_cost(patrols[i][1], patrols[i][0], cp, Side::Red);
      if (fe.monopoly.catch_value_at(psi_R, fe.fishery) <= psi_B) continue;
      if (fe.monopoly.catch_value_at(psi_B, fe.fishery) <= psi_R) continue;
      train_x.push_back({psi_B - cp.c_B, psi_R - cp.c_R});
      train_B.push_back(levels[i].blue);
      train_R.push_back(levels[i].red);
    }
    fe.interior_points = static_cast<int>(train_x.size());

    const auto held_out_r2 = [&](Side side) {
      std::vector<double> obs, pred;
      for (std::size_t i = 0; i < unit.size(); ++i) {
        if (!is_held_out(i)) continue;
        obs.push_back(levels[i].of(side));
        pred.push_back(fe.predict(patrols[i][0], patrols[i][1], cp).of(side));
      }
      return r_squared(obs, pred);
    };
    fe.blue = fit_polynomial(train_x, train_B, 3, feature_bounds);
    fe.red = fit_polynomial(train_x, train_R, 3, feature_bounds);
    for (Side side : {Side::Blue, Side::Red}) {
      PolynomialModel& poly = side == Side::Blue ? fe.blue : fe.red;
      double& r2 = side == Side::Blue ? fe.r2_blue : fe.r2_red;
      const auto& y = side == Side::Blue ? train_B : train_R;
      r2 = held_out_r2(side);
      if (r2 < kMinimumR2) {
        poly = fit_polynomial(train_x, y, 4, feature_bounds);
        r2 = held_out_r2(side);
      }
      if (r2 < kMinimumR2) {
        throw FitRejected(fmt::format("fishery {} {} equilibrium surrogate rejected: held-out R^2 {:.4f} < {}",
                                      f + 1, to_string(side), r2, kMinimumR2),
                          r2);
      }
    }
    eq.per_fishery.push_back(std::move(fe));
  }
  return eq;
}

EquilibriumModel build_equilibrium_model(const Scenario& sc, std::uint64_t seed) {
  const auto brms = fit_best_response_models(sc, 400, seed);
  return fit_equilibrium_model(sc, brms, 250, optim::mix_seed(seed, 77));
}

double total_utility(const Allocation& blue, const Allocation& red, const Scenario& sc,
                     const EquilibriumModel& eq, Side side) {
  if (eq.k() != sc.k()) throw std::invalid_argument("total_utility: equilibrium model fishery count differs from scenario");
  if (blue.size() != sc.k() || red.size() != sc.k()) {
    throw std::invalid_argument("total_utility: allocation length differs from fishery count");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < sc.k(); ++i) {
    const FishingLevels levels = eq.predict(i, blue[i], red[i]);
    total += fishery_profit(levels, blue[i], red[i], sc.fisheries[i], sc.costs, side);
  }
  return total;
}

void to_json(nlohmann::json& j, const BestResponseModel& m) {
  j = nlohmann::json{{"side", std::string(to_string(m.side))},
                     {"F_max", m.F_max},
                     {"input_bounds", m.input_bounds},
                     {"features", {"F_other", "patrol_surcharge"}},
                     {"polynomial", m.poly},
                     {"r2_in_sample", m.r2_in_sample},
                     {"r2_held_out", m.r2_held_out}};
}

void to_json(nlohmann::json& j, const FisheryEquilibrium& m) {
  j = nlohmann::json{{"fishery",
                      {{"r", m.fishery.r}, {"Z", m.fishery.Z}, {"q", m.fishery.q},
                       {"alpha", m.fishery.alpha}, {"gamma", m.fishery.gamma}, {"p", m.fishery.p}}},
                     {"features", {"surcharge_blue", "surcharge_red"}},
                     {"blue", m.blue},
                     {"red", m.red},
                     {"r2_blue", m.r2_blue},
                     {"r2_red", m.r2_red},
                     {"interior_points", m.interior_points},
                     {"monopoly_table", {{"psi_lo", m.monopoly.psi_lo},
                                         {"psi_hi", m.monopoly.psi_hi},
                                         {"effort", m.monopoly.effort},
                                         {"catch_value", m.monopoly.catch_value}}}};
}

void to_json(nlohmann::json& j, const EquilibriumModel& m) {
  j = nlohmann::json{{"input_bounds", m.input_bounds}, {"fisheries", m.per_fishery}};
}

}  // namespace patrolrsm
