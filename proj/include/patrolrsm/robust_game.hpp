#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "patrolrsm/bioeconomics.hpp"
#include "patrolrsm/equilibrium.hpp"
#include "patrolrsm/surrogate.hpp"

namespace patrolrsm {

/// The surface never reached the adequacy R^2 before the sample cap.
class AdequacyError : public std::runtime_error {
 public:
  AdequacyError(const std::string& what, double last_r2) : std::runtime_error(what), last_r2_(last_r2) {}
  double last_r2() const noexcept { return last_r2_; }

 private:
  double last_r2_;
};

/// What the response surface is fit to.
enum class SolveMode { Robust, NonRobust };

struct AlgorithmConfig {
  int n_lhs = 20;
  int n_uni = 20;
  int max_samples = 300;
  double adequacy_r2 = 0.5;
  int n_restarts = 20;
  int heuristic_rounds = 4;
  int cv_folds = 5;
  std::optional<double> epsilon;  ///< overrides Scenario::epsilon when set
  double lambda = 1.0;            ///< weight on the robust utility in the recorded objective
  std::uint64_t rng_seed = 0;

  void validate() const;
  double epsilon_for(const Scenario& sc) const { return epsilon.value_or(sc.epsilon); }
};

struct RedResponses {
  Allocation P_R_star;
  Allocation P_R_prime;
  double pi_R_star = 0.0;
  double pi_R_prime = 0.0;
  double pi_B_at_star = 0.0;   ///< non-robust utility
  double pi_B_at_prime = 0.0;  ///< robust utility
  bool additive_fallback = false;
  bool adversary_evaluated = true;
  double objective = 0.0;  ///< value the surface is fit to
};

/// Red's optimum over his simplex (multistart COBYLA).
Allocation red_optimal_response(const Allocation& P_B, const Scenario& sc, const EquilibriumModel& eq,
                                int n_restarts, std::uint64_t seed);

struct AdversarialResponse {
  Allocation P_R_prime;
  bool additive_fallback = false;
};

/// Blue-worst Red allocation that keeps Red within his tolerated shortfall of
/// pi_R(P_R_star): pi_R >= pi_R_star / (1 + eps) when pi_R_star > 0, otherwise
/// pi_R >= pi_R_star - eps |pi_R_star| (flagged). P_R_star is always a candidate.
AdversarialResponse red_adversarial_response(const Allocation& P_B, const Allocation& P_R_star,
                                             const Scenario& sc, const EquilibriumModel& eq,
                                             double epsilon, int n_restarts, std::uint64_t seed);

/// Both Red responses and all four utilities; deterministic in (P_B, cfg.rng_seed).
RedResponses robust_utility(const Allocation& P_B, const Scenario& sc, const EquilibriumModel& eq,
                            const AlgorithmConfig& cfg, SolveMode mode = SolveMode::Robust);

/// Alternating single-start responses (Red to Blue, then Blue to Red) for `rounds`
/// rounds; returns the final Blue allocation.
Allocation heuristic_response(const Allocation& P_init, const Scenario& sc, const EquilibriumModel& eq,
                              int rounds = 4);

struct TraceRecord {
  int iteration = 0;
  std::string source;  ///< lhs, unilateral, surface, final
  std::vector<double> P_B;
  std::vector<double> P_R_star;
  std::vector<double> P_R_prime;
  double pi_R_star = 0.0;
  double pi_R_prime = 0.0;
  double pi_B_at_star = 0.0;
  double pi_B_at_prime = 0.0;
  double objective = 0.0;
  bool additive_fallback = false;
  bool adversary_evaluated = true;
  std::optional<double> cv_r2;  ///< set on "cv" event lines
  std::optional<BoostingParams> hyperparams;
};

struct SolveTrace {
  std::vector<TraceRecord> samples;  ///< the surface's data, in order
  std::vector<TraceRecord> events;   ///< cv events and the final evaluation
  TreeEnsemble surface;
  std::optional<Allocation> best_estimate;
  AlgorithmConfig config;
  SolveMode mode = SolveMode::Robust;
  std::string chosen_from;  ///< "surface" or "sampled"
};

struct SolveResult {
  Allocation allocation;
  RedResponses responses;
  SolveTrace trace;
};

/// Line-delimited JSON output and replay for resumable runs.
struct TraceIO {
  std::ostream* out = nullptr;            ///< each record is written and flushed as it happens
  std::vector<TraceRecord> replay;        ///< records from an earlier run, consumed in order
};

SolveResult algorithm1_solve(const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg,
                             TraceIO* io = nullptr);

/// Algorithm 1 with the surface fit to pi_B(P_B, P_R_star).
SolveResult solve_nonrobust(const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg,
                            TraceIO* io = nullptr);

SolveResult solve(const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg,
                  SolveMode mode, TraceIO* io = nullptr);

struct Metrics {
  double v = 0.0;
  double w = 0.0;
  RedResponses robust_solution;     ///< responses to P_B_star
  RedResponses nonrobust_solution;  ///< responses to P_B_NR
};

/// v = robust(P*)/robust(P_NR) - 1; w = v + nonrobust(P*)/nonrobust(P_NR) - 1.
/// Throws std::domain_error when a denominator utility is <= 0.
std::pair<double, double> metrics_from_utilities(double robust_star, double robust_nr, double nonrobust_star,
                                                 double nonrobust_nr);

/// metrics_from_utilities on freshly recomputed responses to both solutions.
Metrics compute_metrics(const Allocation& robust_solution, const Allocation& nonrobust_solution,
                        const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg);

nlohmann::json to_json(const TraceRecord& r);
TraceRecord trace_record_from_json(const nlohmann::json& j);
std::vector<TraceRecord> read_trace(std::istream& in);

}  // namespace patrolrsm
