#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "patrolrsm/robust_game.hpp"
#include "patrolrsm/scenario_io.hpp"

namespace patrolrsm {

/// Linear interpolation between order statistics at h = (n - 1) pct / 100.
double percentile(std::vector<double> values, double pct);

struct PercentileRow {
  int pct = 0;
  double v = 0.0;
  double w = 0.0;
};

struct BatchRow {
  int scenario_id = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  ///< ok, adequacy, error
  std::string error;
  double v = 0.0;
  double w = 0.0;
  double robust_star = 0.0;      ///< robust utility of the robust solution
  double robust_nr = 0.0;        ///< robust utility of the non-robust solution
  double nonrobust_star = 0.0;
  double nonrobust_nr = 0.0;
  double min_model_r2 = 0.0;
  std::vector<double> P_B_star;
  std::vector<double> P_B_nr;
  // wall-clock seconds; written to timings.csv only, so rows.csv stays reproducible
  double fit_seconds = 0.0;
  double robust_seconds = 0.0;
  double nonrobust_seconds = 0.0;

  bool ok() const noexcept { return status == "ok"; }
};

struct BatchReport {
  std::vector<BatchRow> rows;
  std::vector<PercentileRow> percentiles;  ///< 5th to 95th in steps of 5, over ok rows
};

/// Desk-scale defaults: 100-sample cap and 10 restarts.
AlgorithmConfig desk_config();

struct BatchOptions {
  ScenarioDistribution dist;
  int n_scenarios = 25;
  AlgorithmConfig cfg = desk_config();
  std::uint64_t seed = 0;
  int parallelism = 1;
  std::optional<std::filesystem::path> trace_dir;  ///< per-scenario JSONL traces when set
};

std::uint64_t scenario_seed(std::uint64_t batch_seed, int scenario_id) noexcept;

BatchRow run_scenario(const Scenario& sc, int scenario_id, std::uint64_t seed, const AlgorithmConfig& cfg,
                      const std::optional<std::filesystem::path>& trace_dir = std::nullopt);

BatchReport run_batch(const BatchOptions& opt);

std::vector<PercentileRow> percentile_table(const std::vector<BatchRow>& rows);

/// Table 1 allocations for the Example 1 scenario.
Allocation example1_robust_allocation();
Allocation example1_nonrobust_allocation();

struct ComparisonLine {
  std::string quantity;
  double computed = 0.0;
  std::optional<double> reference;
};

struct Example1Report {
  Scenario scenario;
  double min_model_r2 = 0.0;
  Metrics fixed;  ///< Table 1 allocations evaluated with this model
  std::optional<SolveResult> robust;
  std::optional<SolveResult> nonrobust;
  std::optional<Metrics> resolved;
  std::vector<ComparisonLine> table;
};

struct Example1Options {
  AlgorithmConfig cfg;
  bool resolve = false;
  std::optional<std::filesystem::path> trace_dir;
};

Example1Report run_example1(const Example1Options& opt);

/// rows.csv, timings.csv, percentiles.csv, percentiles_v.svg, percentiles_w.svg.
void emit_report(const BatchReport& report, const std::filesystem::path& out_dir);

/// percentiles.csv, percentiles_v.svg, percentiles_w.svg.
void emit_percentiles(const std::vector<PercentileRow>& table, const std::filesystem::path& out_dir);

void write_rows_csv(const std::vector<BatchRow>& rows, const std::filesystem::path& path);
std::vector<BatchRow> read_rows_csv(const std::filesystem::path& path);

void write_example1(const Example1Report& rep, const std::filesystem::path& out_dir);

/// trace.csv (one line per sample) and convergence.svg (best objective so far).
void emit_trace_report(const std::vector<TraceRecord>& trace, const std::filesystem::path& out_dir);

/// Static line chart over x in [0, 100].
std::string percentile_svg(const std::vector<std::pair<double, double>>& points, const std::string& title,
                           const std::string& y_label, const std::string& x_label = "percentile");

}  // namespace patrolrsm
