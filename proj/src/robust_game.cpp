#include "patrolrsm/robust_game.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <tuple>

#include <fmt/format.h>

#include "patrolrsm/optim.hpp"

namespace patrolrsm {

using nlohmann::json;
using optim::mix_seed;

void AlgorithmConfig::validate() const {
  if (n_lhs < 1 || n_uni < 0) throw std::invalid_argument("n_lhs must be >= 1 and n_uni >= 0");
  if (n_lhs + n_uni < std::max(5, cv_folds)) {
    throw std::invalid_argument("n_lhs + n_uni must be at least max(5, cv_folds)");
  }
  if (max_samples < n_lhs + n_uni) throw std::invalid_argument("max_samples must be >= n_lhs + n_uni");
  if (n_restarts < 1) throw std::invalid_argument("n_restarts must be >= 1");
  if (heuristic_rounds < 1) throw std::invalid_argument("heuristic_rounds must be >= 1");
  if (cv_folds < 2) throw std::invalid_argument("cv_folds must be >= 2");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (epsilon && !(*epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
}

namespace {

// Utility of `side` for raw patrol vectors; skips Allocation validation in inner loops.
double utility(std::span<const double> blue, std::span<const double> red, const Scenario& sc,
               const EquilibriumModel& eq, Side side) {
  double total = 0.0;
  for (std::size_t i = 0; i < sc.k(); ++i) {
    const FishingLevels lv = eq.predict(i, blue[i], red[i]);
    total += fishery_profit(lv, blue[i], red[i], sc.fisheries[i], sc.costs, side);
  }
  return total;
}

void check_sizes(const Allocation& P, const Scenario& sc, const EquilibriumModel& eq) {
  if (P.size() != sc.k() || eq.k() != sc.k()) {
    throw std::invalid_argument(fmt::format("allocation has {} entries, scenario {} and model {}", P.size(),
                                            sc.k(), eq.k()));
  }
}

Allocation on_simplex(const std::vector<double>& x, double budget) {
  return Allocation::from_weights(x, budget);
}

// Single local response of `side` to the rival's fixed allocation, warm-started at `start`.
Allocation local_response(const Allocation& start, const Allocation& rival_alloc, const Scenario& sc,
                          const EquilibriumModel& eq, Side side) {
  const auto& rv = rival_alloc.vector();
  auto prob = optim::simplex_problem(
      static_cast<int>(sc.k()), sc.budget(side),
      [&](std::span<const double> x) {
        return side == Side::Blue ? utility(x, rv, sc, eq, side) : utility(rv, x, sc, eq, side);
      },
      true);
  const auto res = optim::minimize_constrained(prob, start.values());
  if (!res.feasible) return start;
  const Allocation cand = on_simplex(res.x, sc.budget(side));
  const auto value = [&](const Allocation& a) {
    return side == Side::Blue ? utility(a.values(), rv, sc, eq, side) : utility(rv, a.values(), sc, eq, side);
  };
  return value(cand) >= value(start) ? cand : start;
}

}  // namespace

Allocation red_optimal_response(const Allocation& P_B, const Scenario& sc, const EquilibriumModel& eq,
                                int n_restarts, std::uint64_t seed) {
  check_sizes(P_B, sc, eq);
  const auto& b = P_B.vector();
  auto prob = optim::simplex_problem(
      static_cast<int>(sc.k()), sc.red_budget,
      [&](std::span<const double> x) { return utility(b, x, sc, eq, Side::Red); }, true);
  const auto res = optim::multistart_minimize(prob, n_restarts, seed);
  return on_simplex(res.x, sc.red_budget);
}

AdversarialResponse red_adversarial_response(const Allocation& P_B, const Allocation& P_R_star,
                                             const Scenario& sc, const EquilibriumModel& eq,
                                             double epsilon, int n_restarts, std::uint64_t seed) {
  check_sizes(P_B, sc, eq);
  const auto& b = P_B.vector();
  const double pi_R_star = utility(b, P_R_star.values(), sc, eq, Side::Red);
  const double pi_B_star = utility(b, P_R_star.values(), sc, eq, Side::Blue);

  AdversarialResponse out{P_R_star, false};
  auto prob = optim::simplex_problem(
      static_cast<int>(sc.k()), sc.red_budget,
      [&](std::span<const double> x) { return utility(b, x, sc, eq, Side::Blue); }, false);

  double threshold = -std::numeric_limits<double>::infinity();
  if (std::isfinite(epsilon)) {
    double scale = 0.0;
    if (pi_R_star > 0.0) {
      threshold = pi_R_star / (1.0 + epsilon);
      scale = threshold;
    } else {
      threshold = pi_R_star - epsilon * std::abs(pi_R_star);
      scale = std::max(std::abs(pi_R_star), 1.0);
      out.additive_fallback = true;
    }
    // Small inward margin so that a point accepted at the solver's tolerance still meets the bound.
    prob.inequality.push_back([&, threshold, scale](std::span<const double> x) {
      return (utility(b, x, sc, eq, Side::Red) - threshold) / scale - 1e-6;
    });
  }

  std::vector<optim::OptResult> candidates;
  try {
    candidates.push_back(optim::multistart_minimize(prob, n_restarts, seed));
  } catch (const std::runtime_error&) {
    // every start ended infeasible; P_R_star remains
  }
  candidates.push_back(optim::minimize_constrained(prob, P_R_star.values()));

  const double accept_at = threshold - 1e-7 * std::abs(threshold);
  double best_blue = pi_B_star;
  for (const auto& c : candidates) {
    if (!c.feasible) continue;
    const Allocation cand = on_simplex(c.x, sc.red_budget);
    const double pi_R = utility(b, cand.values(), sc, eq, Side::Red);
    const double pi_B = utility(b, cand.values(), sc, eq, Side::Blue);
    if (pi_R >= accept_at && pi_B < best_blue) {
      best_blue = pi_B;
      out.P_R_prime = cand;
    }
  }
  return out;
}

RedResponses robust_utility(const Allocation& P_B, const Scenario& sc, const EquilibriumModel& eq,
                            const AlgorithmConfig& cfg, SolveMode mode) {
  check_sizes(P_B, sc, eq);
  if (std::abs(P_B.budget() - sc.blue_budget) > Allocation::kRelativeTolerance * sc.blue_budget) {
    throw std::invalid_argument("Blue allocation budget does not match the scenario");
  }
  const std::uint64_t seed = optim::hash_values(P_B.values(), cfg.rng_seed);
  RedResponses r{red_optimal_response(P_B, sc, eq, cfg.n_restarts, mix_seed(seed, 1)),
                 Allocation::uniform(sc.k(), sc.red_budget)};
  r.P_R_prime = r.P_R_star;
  if (mode == SolveMode::Robust) {
    auto adv = red_adversarial_response(P_B, r.P_R_star, sc, eq, cfg.epsilon_for(sc), cfg.n_restarts,
                                        mix_seed(seed, 2));
    r.P_R_prime = std::move(adv.P_R_prime);
    r.additive_fallback = adv.additive_fallback;
  } else {
    r.adversary_evaluated = false;
  }
  const auto& b = P_B.vector();
  r.pi_R_star = utility(b, r.P_R_star.values(), sc, eq, Side::Red);
  r.pi_R_prime = utility(b, r.P_R_prime.values(), sc, eq, Side::Red);
  r.pi_B_at_star = utility(b, r.P_R_star.values(), sc, eq, Side::Blue);
  r.pi_B_at_prime = utility(b, r.P_R_prime.values(), sc, eq, Side::Blue);
  r.objective = mode == SolveMode::Robust ? cfg.lambda * r.pi_B_at_prime + (1.0 - cfg.lambda) * r.pi_B_at_star
                                          : r.pi_B_at_star;
  return r;
}

Allocation heuristic_response(const Allocation& P_init, const Scenario& sc, const EquilibriumModel& eq,
                              int rounds) {
  check_sizes(P_init, sc, eq);
  Allocation blue = P_init;
  Allocation red = Allocation::uniform(sc.k(), sc.red_budget);
  for (int t = 0; t < rounds; ++t) {
    red = local_response(red, blue, sc, eq, Side::Red);
    blue = local_response(blue, red, sc, eq, Side::Blue);
  }
  return blue;
}

// --- Trace ------------------------------------------------------------------

json to_json(const TraceRecord& r) {
  json j;
  j["iteration"] = r.iteration;
  j["source"] = r.source;
  if (r.source == "cv") {
    j["cv_r2"] = r.cv_r2 ? json(*r.cv_r2) : json(nullptr);
    if (r.hyperparams) j["hyperparams"] = *r.hyperparams;
    return j;
  }
  j["P_B"] = r.P_B;
  j["P_R_star"] = r.P_R_star;
  j["P_R_prime"] = r.P_R_prime;
  j["pi_R_star"] = r.pi_R_star;
  j["pi_R_prime"] = r.pi_R_prime;
  j["pi_B_at_star"] = r.pi_B_at_star;
  j["pi_B_at_prime"] = r.pi_B_at_prime;
  j["objective"] = r.objective;
  j["additive_fallback"] = r.additive_fallback;
  j["adversary_evaluated"] = r.adversary_evaluated;
  j["cv_r2"] = r.cv_r2 ? json(*r.cv_r2) : json(nullptr);
  return j;
}

TraceRecord trace_record_from_json(const json& j) {
  TraceRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.source = j.at("source").get<std::string>();
  if (j.contains("cv_r2") && !j["cv_r2"].is_null()) r.cv_r2 = j["cv_r2"].get<double>();
  if (j.contains("hyperparams")) {
    const auto& h = j["hyperparams"];
    r.hyperparams = BoostingParams{h.at("n_trees").get<int>(), h.at("max_depth").get<int>(),
                                   h.at("learning_rate").get<double>()};
  }
  if (r.source == "cv") return r;
  r.P_B = j.at("P_B").get<std::vector<double>>();
  r.P_R_star = j.at("P_R_star").get<std::vector<double>>();
  r.P_R_prime = j.at("P_R_prime").get<std::vector<double>>();
  r.pi_R_star = j.at("pi_R_star").get<double>();
  r.pi_R_prime = j.at("pi_R_prime").get<double>();
  r.pi_B_at_star = j.at("pi_B_at_star").get<double>();
  r.pi_B_at_prime = j.at("pi_B_at_prime").get<double>();
  r.objective = j.at("objective").get<double>();
  r.additive_fallback = j.value("additive_fallback", false);
  r.adversary_evaluated = j.value("adversary_evaluated", true);
  return r;
}

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(trace_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      // a run killed mid-write leaves a truncated last line
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw std::runtime_error(fmt::format("trace line {}: {}", lineno, e.what()));
    }
  }
  return out;
}

// --- Algorithm 1 --------------------------------------------------------------

namespace {

class Runner {
 public:
  Runner(const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg, SolveMode mode,
         TraceIO* io)
      : sc_(sc), eq_(eq), cfg_(cfg), mode_(mode), io_(io) {}

  SolveResult run();

 private:
  const TraceRecord* next_replay(const char* expected_source) {
    if (!io_ || replay_pos_ >= io_->replay.size()) return nullptr;
    const TraceRecord& r = io_->replay[replay_pos_];
    if (r.source != expected_source) {
      throw std::runtime_error(fmt::format("trace record {} is '{}' where '{}' was expected; the trace "
                                           "belongs to a different run",
                                           replay_pos_ + 1, r.source, expected_source));
    }
    return &r;
  }

  void emit(const TraceRecord& r) {
    if (io_ && io_->out) {
      *io_->out << to_json(r).dump() << '\n';
      io_->out->flush();
    }
  }

  bool room() const { return static_cast<int>(data_.size()) < cfg_.max_samples; }

  TraceRecord evaluate(const Allocation& P_B, const char* source);
  void add_sample(const Allocation& P_B, const char* source);
  Allocation heuristic_sample(optim::Rng& rng);
  std::optional<Allocation> replayed_allocation(const char* source);
  void run_cv();
  Allocation maximize_surface(const std::function<bool(optim::OptProblem&, optim::Rng&)>& constrain,
                              std::uint64_t seed);

  const Scenario& sc_;
  const EquilibriumModel& eq_;
  AlgorithmConfig cfg_;
  SolveMode mode_;
  TraceIO* io_;
  std::size_t replay_pos_ = 0;

  Dataset data_;
  SolveTrace trace_;
  BoostingParams params_;
  std::optional<double> cv_r2_;
};

TraceRecord Runner::evaluate(const Allocation& P_B, const char* source) {
  TraceRecord rec;
  if (const TraceRecord* old = next_replay(source)) {
    double diff = 0.0;
    if (old->P_B.size() == P_B.size()) {
      for (std::size_t i = 0; i < P_B.size(); ++i) diff = std::max(diff, std::abs(old->P_B[i] - P_B[i]));
    } else {
      diff = std::numeric_limits<double>::infinity();
    }
    if (!(diff <= 1e-9 * sc_.blue_budget)) {
      throw std::runtime_error(fmt::format("trace record {} has a different P_B; the trace belongs to a "
                                           "different run",
                                           replay_pos_ + 1));
    }
    rec = *old;
    ++replay_pos_;
  } else {
    const RedResponses r = robust_utility(P_B, sc_, eq_, cfg_, mode_);
    rec.source = source;
    rec.P_B = P_B.vector();
    rec.P_R_star = r.P_R_star.vector();
    rec.P_R_prime = r.P_R_prime.vector();
    rec.pi_R_star = r.pi_R_star;
    rec.pi_R_prime = r.pi_R_prime;
    rec.pi_B_at_star = r.pi_B_at_star;
    rec.pi_B_at_prime = r.pi_B_at_prime;
    rec.objective = r.objective;
    rec.additive_fallback = r.additive_fallback;
    rec.adversary_evaluated = r.adversary_evaluated;
  }
  rec.iteration = static_cast<int>(data_.size() + trace_.events.size());
  rec.cv_r2.reset();
  emit(rec);
  return rec;
}

void Runner::add_sample(const Allocation& P_B, const char* source) {
  TraceRecord rec = evaluate(P_B, source);
  data_.add(rec.P_B, rec.objective);
  trace_.samples.push_back(std::move(rec));
}

std::optional<Allocation> Runner::replayed_allocation(const char* source) {
  if (const TraceRecord* old = next_replay(source)) return Allocation(old->P_B, sc_.blue_budget);
  return std::nullopt;
}

Allocation Runner::heuristic_sample(optim::Rng& rng) {
  // The start is drawn even when replaying so the generator stays in step.
  const auto start = optim::dirichlet_uniform(static_cast<int>(sc_.k()), sc_.blue_budget, rng);
  if (auto a = replayed_allocation("unilateral")) return *a;
  return heuristic_response(Allocation::from_weights(start, sc_.blue_budget), sc_, eq_, cfg_.heuristic_rounds);
}

void Runner::run_cv() {
  TraceRecord ev;
  ev.source = "cv";
  if (const TraceRecord* old = next_replay("cv")) {
    if (!old->cv_r2 || !old->hyperparams) throw std::runtime_error("trace cv record is incomplete");
    ev.cv_r2 = old->cv_r2;
    ev.hyperparams = old->hyperparams;
    ++replay_pos_;
  } else {
    const CvSelection sel = cross_validate_select(data_, default_grid(), cfg_.cv_folds);
    ev.cv_r2 = sel.cv_r2;
    ev.hyperparams = sel.best;
  }
  ev.iteration = static_cast<int>(data_.size() + trace_.events.size());
  cv_r2_ = ev.cv_r2;
  params_ = *ev.hyperparams;
  emit(ev);
  trace_.events.push_back(ev);
}

Allocation Runner::maximize_surface(const std::function<bool(optim::OptProblem&, optim::Rng&)>& constrain,
                                    std::uint64_t seed) {
  const TreeEnsemble& surface = trace_.surface;
  auto prob = optim::simplex_problem(static_cast<int>(sc_.k()), sc_.blue_budget,
                                     [&surface](std::span<const double> x) { return surface.predict(x); },
                                     true);
  optim::Rng rng(seed);
  for (int attempt = 0;; ++attempt) {
    auto p = prob;
    if (!constrain(p, rng)) continue;
    try {
      const auto res = optim::multistart_minimize(p, cfg_.n_restarts, mix_seed(seed, static_cast<std::uint64_t>(attempt)));
      return on_simplex(res.x, sc_.blue_budget);
    } catch (const std::runtime_error&) {
      if (attempt >= 100) throw;
    }
  }
}

SolveResult Runner::run() {
  cfg_.validate();
  sc_.validate();
  if (eq_.k() != sc_.k()) throw std::invalid_argument("equilibrium model and scenario disagree on k");
  trace_.config = cfg_;
  trace_.mode = mode_;
  const int k = static_cast<int>(sc_.k());
  const std::uint64_t seed = mix_seed(cfg_.rng_seed, mode_ == SolveMode::Robust ? 0x5b : 0x4e);

  // Step 1: space-filling plus unilateral-heuristic samples.
  for (const auto& a : optim::latin_hypercube_simplex(cfg_.n_lhs, k, sc_.blue_budget, mix_seed(seed, 11))) {
    add_sample(a, "lhs");
  }
  optim::Rng heur_rng(mix_seed(seed, 12));
  for (int i = 0; i < cfg_.n_uni; ++i) add_sample(heuristic_sample(heur_rng), "unilateral");

  // Step 2: grow the design until the surface is adequate.
  for (int round = 0;; ++round) {
    run_cv();
    if (*cv_r2_ > cfg_.adequacy_r2) break;
    if (!room()) {
      throw AdequacyError(fmt::format("surface cross-validated R^2 {:.4f} <= {} after {} samples",
                                      *cv_r2_, cfg_.adequacy_r2, data_.size()),
                          *cv_r2_);
    }
    add_sample(optim::latin_hypercube_simplex(1, k, sc_.blue_budget, mix_seed(seed, 100000 + round)).front(),
               "lhs");
    if (room()) add_sample(heuristic_sample(heur_rng), "unilateral");
  }
  trace_.surface = fit_boosted_trees(data_, params_);
  trace_.surface.cv_r2 = cv_r2_;

  // Steps 3-4: sample the surface's argmax under a random one-fishery share bound.
  optim::Rng draw_rng(mix_seed(seed, 13));
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int iter = 0; room(); ++iter) {
    const auto constrain = [&](optim::OptProblem& p, optim::Rng&) {
      const auto i = static_cast<std::size_t>(pick(draw_rng));
      const double alpha = unit(draw_rng);
      const bool upper = unit(draw_rng) < 0.5;
      if (upper && k == 1 && alpha < 1.0) return false;
      const double B = sc_.blue_budget;
      p.inequality.push_back([=](std::span<const double> x) { return upper ? alpha - x[i] / B : x[i] / B - alpha; });
      p.start_sampler = [=](optim::Rng& rng) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const double xi = upper ? alpha * B * u : B * (alpha + (1.0 - alpha) * u);
        std::vector<double> x(static_cast<std::size_t>(k), 0.0);
        if (k > 1) {
          const auto rest = optim::dirichlet_uniform(k - 1, 1.0, rng);
          for (int j = 0, r = 0; j < k; ++j) {
            if (static_cast<std::size_t>(j) != i) x[static_cast<std::size_t>(j)] = (B - xi) * rest[static_cast<std::size_t>(r++)];
          }
        }
        x[i] = k > 1 ? xi : B;
        return x;
      };
      return true;
    };
    Allocation next = maximize_surface(constrain, mix_seed(seed, 200000 + static_cast<std::uint64_t>(iter)));
    if (auto replayed = replayed_allocation("surface")) next = *replayed;
    add_sample(next, "surface");
    trace_.surface = fit_boosted_trees(data_, params_);
    trace_.surface.cv_r2 = cv_r2_;
  }

  // Step 5: unconstrained surface argmax against the best sampled point.
  const Allocation cand = maximize_surface([](optim::OptProblem&, optim::Rng&) { return true; },
                                           mix_seed(seed, 300000));
  trace_.best_estimate = cand;
  TraceRecord fin = evaluate(cand, "final");
  trace_.events.push_back(fin);

  std::size_t best = 0;
  for (std::size_t s = 1; s < trace_.samples.size(); ++s) {
    if (trace_.samples[s].objective > trace_.samples[best].objective) best = s;
  }
  const TraceRecord& chosen = fin.objective > trace_.samples[best].objective ? fin : trace_.samples[best];
  trace_.chosen_from = &chosen == &fin ? "surface" : "sampled";

  SolveResult out{Allocation(chosen.P_B, sc_.blue_budget),
                  RedResponses{Allocation(chosen.P_R_star, sc_.red_budget),
                               Allocation(chosen.P_R_prime, sc_.red_budget)},
                  {}};
  out.responses.pi_R_star = chosen.pi_R_star;
  out.responses.pi_R_prime = chosen.pi_R_prime;
  out.responses.pi_B_at_star = chosen.pi_B_at_star;
  out.responses.pi_B_at_prime = chosen.pi_B_at_prime;
  out.responses.objective = chosen.objective;
  out.responses.additive_fallback = chosen.additive_fallback;
  out.responses.adversary_evaluated = chosen.adversary_evaluated;
  out.trace = std::move(trace_);
  return out;
}

}  // namespace

SolveResult solve(const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg, SolveMode mode,
                  TraceIO* io) {
  return Runner(sc, eq, cfg, mode, io).run();
}

SolveResult algorithm1_solve(const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg,
                             TraceIO* io) {
  return solve(sc, eq, cfg, SolveMode::Robust, io);
}

SolveResult solve_nonrobust(const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg,
                            TraceIO* io) {
  return solve(sc, eq, cfg, SolveMode::NonRobust, io);
}

std::pair<double, double> metrics_from_utilities(double robust_star, double robust_nr, double nonrobust_star,
                                                 double nonrobust_nr) {
  if (!(robust_nr > 0.0) || !(nonrobust_nr > 0.0)) {
    throw std::domain_error(fmt::format("metric denominators must be positive (robust {}, non-robust {})",
                                        robust_nr, nonrobust_nr));
  }
  const double v = robust_star / robust_nr - 1.0;
  return {v, v + (nonrobust_star / nonrobust_nr - 1.0)};
}

Metrics compute_metrics(const Allocation& robust_solution, const Allocation& nonrobust_solution,
                        const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg) {
  AlgorithmConfig pure = cfg;
  pure.lambda = 1.0;
  Metrics m{0.0, 0.0, robust_utility(robust_solution, sc, eq, pure, SolveMode::Robust),
            robust_utility(nonrobust_solution, sc, eq, pure, SolveMode::Robust)};
  std::tie(m.v, m.w) = metrics_from_utilities(m.robust_solution.pi_B_at_prime, m.nonrobust_solution.pi_B_at_prime,
                                              m.robust_solution.pi_B_at_star, m.nonrobust_solution.pi_B_at_star);
  return m;
}

}  // namespace patrolrsm
