#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "patrolrsm/experiments.hpp"
#include "patrolrsm/robust_game.hpp"
#include "patrolrsm/scenario_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace patrolrsm;

namespace {

struct Tuning {
  int samples = 0;
  int restarts = 0;
  int lhs = 0;
  int uni = 0;
  double epsilon = -1.0;
  double lambda = 1.0;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app, bool with_seed = true) {
    app->add_option("--samples", samples, "sample cap (total robust-utility evaluations)");
    app->add_option("--restarts", restarts, "COBYLA restarts per optimization");
    app->add_option("--lhs", lhs, "initial Latin hypercube samples");
    app->add_option("--uni", uni, "initial unilateral-heuristic samples");
    app->add_option("--epsilon", epsilon, "Red's tolerated relative shortfall (overrides the scenario)");
    app->add_option("--lambda", lambda, "weight on robust utility in the objective")->check(CLI::Range(0.0, 1.0));
    if (with_seed) app->add_option("--seed", seed, "random seed");
  }

  AlgorithmConfig apply(AlgorithmConfig cfg) const {
    if (samples > 0) cfg.max_samples = samples;
    if (restarts > 0) cfg.n_restarts = restarts;
    if (lhs > 0) cfg.n_lhs = lhs;
    if (uni > 0) cfg.n_uni = uni;
    if (epsilon >= 0.0) cfg.epsilon = epsilon;
    cfg.lambda = lambda;
    cfg.rng_seed = seed;
    cfg.validate();
    return cfg;
  }
};

json responses_json(const RedResponses& r) {
  return {{"P_R_star", r.P_R_star.vector()},   {"P_R_prime", r.P_R_prime.vector()},
          {"pi_R_star", r.pi_R_star},          {"pi_R_prime", r.pi_R_prime},
          {"pi_B_at_star", r.pi_B_at_star},    {"pi_B_at_prime", r.pi_B_at_prime},
          {"objective", r.objective},          {"additive_fallback", r.additive_fallback}};
}

json solution_json(const SolveResult& s) {
  json j = {{"P_B", s.allocation.vector()},
            {"responses", responses_json(s.responses)},
            {"chosen_from", s.trace.chosen_from},
            {"samples", s.trace.samples.size()},
            {"surface_hyperparams", s.trace.surface.hyperparams}};
  j["surface_cv_r2"] = s.trace.surface.cv_r2 ? json(*s.trace.surface.cv_r2) : json(nullptr);
  return j;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

std::vector<TraceRecord> load_trace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot read trace {}", path.string()));
  return read_trace(in);
}

SolveResult solve_with_trace(const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg,
                             SolveMode mode, const fs::path& trace_path, bool resume) {
  TraceIO io;
  if (resume && fs::exists(trace_path)) {
    io.replay = load_trace(trace_path);
    fs::copy_file(trace_path, fs::path(trace_path).concat(".bak"), fs::copy_options::overwrite_existing);
    std::cerr << fmt::format("resuming {} from {} records\n", trace_path.string(), io.replay.size());
  }
  std::ofstream out(trace_path);
  if (!out) throw std::runtime_error(fmt::format("cannot write trace {}", trace_path.string()));
  io.out = &out;
  return solve(sc, eq, cfg, mode, &io);
}

void print_solution(const char* label, const SolveResult& s) {
  std::cout << fmt::format("{} P_B = [{:.2f}]\n", label, fmt::join(s.allocation.vector(), ", "));
  if (s.responses.adversary_evaluated) {
    std::cout << fmt::format("  robust utility {:.2f}, non-robust utility {:.2f}", s.responses.pi_B_at_prime,
                             s.responses.pi_B_at_star);
  } else {
    std::cout << fmt::format("  non-robust utility {:.2f}", s.responses.pi_B_at_star);
  }
  std::cout << fmt::format(" ({} samples, answer from {})\n", s.trace.samples.size(), s.trace.chosen_from);
}

int cmd_solve(const fs::path& scenario_file, const fs::path& out_dir, const std::string& mode,
              const Tuning& t, bool resume) {
  const Scenario sc = load_scenario(scenario_file);
  const AlgorithmConfig cfg = t.apply(AlgorithmConfig{});
  fs::create_directories(out_dir);
  const EquilibriumModel eq = build_equilibrium_model(sc, cfg.rng_seed);
  {
    json models = eq;
    write_json(models, out_dir / "equilibrium_model.json");
  }
  std::cout << fmt::format("equilibrium models fitted, minimum held-out R^2 {:.4f}\n", eq.min_r2());

  json result = {{"scenario", scenario_file.string()}, {"seed", cfg.rng_seed}};
  std::optional<SolveResult> robust, nonrobust;
  if (mode == "robust" || mode == "both") {
    robust = solve_with_trace(sc, eq, cfg, SolveMode::Robust, out_dir / "trace_robust.jsonl", resume);
    print_solution("robust", *robust);
    result["robust"] = solution_json(*robust);
  }
  if (mode == "nonrobust" || mode == "both") {
    nonrobust = solve_with_trace(sc, eq, cfg, SolveMode::NonRobust, out_dir / "trace_nonrobust.jsonl", resume);
    print_solution("non-robust", *nonrobust);
    result["nonrobust"] = solution_json(*nonrobust);
  }
  if (robust && nonrobust) {
    const Metrics m = compute_metrics(robust->allocation, nonrobust->allocation, sc, eq, cfg);
    result["metrics"] = {{"v", m.v}, {"w", m.w}};
    std::cout << fmt::format("v = {:.2f}%  w = {:.2f}%\n", 100 * m.v, 100 * m.w);
  }
  write_json(result, out_dir / "solution.json");
  return 0;
}

int cmd_example1(const fs::path& out_dir, const Tuning& t, bool resolve) {
  Example1Options opt;
  opt.cfg = t.apply(AlgorithmConfig{});
  opt.resolve = resolve;
  opt.trace_dir = out_dir;
  const Example1Report rep = run_example1(opt);
  write_example1(rep, out_dir);
  std::cout << fmt::format("equilibrium models: minimum held-out R^2 {:.4f}\n", rep.min_model_r2);
  std::cout << fmt::format("{:<34}{:>20}{:>20}{:>10}\n", "quantity", "computed", "reference", "diff");
  for (const auto& line : rep.table) {
    const bool ratio = line.quantity.find("_v") != std::string::npos ||
                       line.quantity.find("_w") != std::string::npos ||
                       line.quantity.find("gap") != std::string::npos;
    const auto show = [ratio](double x) { return ratio ? fmt::format("{:.2f}%", 100 * x) : fmt::format("{:.2f}", x); };
    std::cout << fmt::format("{:<34}{:>20}{:>20}{:>10}\n", line.quantity, show(line.computed),
                             line.reference ? show(*line.reference) : "",
                             !line.reference ? ""
                             : ratio         ? fmt::format("{:+.2f}pp", 100 * (line.computed - *line.reference))
                                             : fmt::format("{:+.1f}%", 100 * (line.computed / *line.reference - 1)));
  }
  if (rep.robust) print_solution("resolved robust", *rep.robust);
  if (rep.nonrobust) print_solution("resolved non-robust", *rep.nonrobust);
  return 0;
}

int cmd_batch(const std::string& dist_file, int n, const Tuning& t, int parallelism, const fs::path& out_dir,
              bool traces) {
  BatchOptions opt;
  if (!dist_file.empty()) opt.dist = load_distribution(dist_file);
  opt.n_scenarios = n;
  opt.cfg = t.apply(desk_config());
  opt.seed = t.seed;
  opt.parallelism = parallelism;
  if (traces) opt.trace_dir = out_dir / "traces";
  const BatchReport rep = run_batch(opt);
  emit_report(rep, out_dir);
  int ok = 0;
  for (const auto& r : rep.rows) {
    if (r.ok()) {
      ++ok;
    } else {
      std::cerr << fmt::format("scenario {} ({}): {}\n", r.scenario_id, r.status, r.error);
    }
  }
  std::cout << fmt::format("{} of {} scenarios completed\n", ok, rep.rows.size());
  for (const auto& p : rep.percentiles) {
    if (p.pct == 5 || p.pct == 50 || p.pct == 95) {
      std::cout << fmt::format("  p{:<3} v = {:7.2f}%  w = {:7.2f}%\n", p.pct, 100 * p.v, 100 * p.w);
    }
  }
  return 0;
}

int cmd_report(const std::string& rows, const std::string& trace, const fs::path& out_dir) {
  if (rows.empty() == trace.empty()) throw std::invalid_argument("give exactly one of --rows or --trace");
  if (!rows.empty()) {
    const auto table = percentile_table(read_rows_csv(rows));
    emit_percentiles(table, out_dir);
    std::cout << fmt::format("{} percentile levels written to {}\n", table.size(), out_dir.string());
  } else {
    const auto records = load_trace(trace);
    emit_trace_report(records, out_dir);
    std::cout << fmt::format("{} trace records written to {}\n", records.size(), out_dir.string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust patrol allocation over multiple fisheries via response surfaces"};
  app.require_subcommand(1);

  Tuning solve_t, ex_t, batch_t;
  std::string scenario_file, mode = "both";
  fs::path solve_out = "out";
  bool resume = false;
  auto* solve_cmd = app.add_subcommand("solve", "solve one scenario file");
  solve_cmd->add_option("scenario", scenario_file, "scenario INI file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--mode", mode, "robust, nonrobust or both")
      ->check(CLI::IsMember({"robust", "nonrobust", "both"}));
  solve_cmd->add_option("--out", solve_out, "output directory");
  solve_cmd->add_flag("--resume", resume, "replay existing traces in --out and continue");
  solve_t.add_to(solve_cmd);

  fs::path ex_out = "out/example1";
  bool resolve = false;
  auto* ex_cmd = app.add_subcommand("example1", "evaluate (and optionally re-solve) the Example 1 scenario");
  ex_cmd->add_option("--out", ex_out, "output directory");
  ex_cmd->add_flag("--resolve", resolve, "also run both solvers");
  ex_t.add_to(ex_cmd);

  std::string dist_file;
  int n = 25, parallelism = 1;
  fs::path batch_out = "out/batch";
  bool traces = false;
  auto* batch_cmd = app.add_subcommand("batch", "run a seeded batch of sampled scenarios");
  batch_cmd->add_option("--dist", dist_file, "distribution INI file (defaults otherwise)")->check(CLI::ExistingFile);
  batch_cmd->add_option("--n", n, "number of scenarios")->check(CLI::PositiveNumber);
  batch_cmd->add_option("--parallelism", parallelism, "concurrent scenarios")->check(CLI::PositiveNumber);
  batch_cmd->add_option("--out", batch_out, "output directory");
  batch_cmd->add_flag("--traces", traces, "write per-scenario traces under --out/traces");
  batch_t.add_to(batch_cmd);

  std::string rows, trace;
  fs::path report_out = "out/report";
  auto* report_cmd = app.add_subcommand("report", "percentile CSV and charts from rows.csv, or a trace summary");
  report_cmd->add_option("--rows", rows, "rows.csv from a batch")->check(CLI::ExistingFile);
  report_cmd->add_option("--trace", trace, "JSONL trace")->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve_cmd) return cmd_solve(scenario_file, solve_out, mode, solve_t, resume);
    if (*ex_cmd) return cmd_example1(ex_out, ex_t, resolve);
    if (*batch_cmd) return cmd_batch(dist_file, n, batch_t, parallelism, batch_out, traces);
    if (*report_cmd) return cmd_report(rows, trace, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
