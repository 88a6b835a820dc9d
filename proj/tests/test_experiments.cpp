#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "patrolrsm/experiments.hpp"
#include "patrolrsm/scenario_io.hpp"

using namespace patrolrsm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("patrolrsm_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

BatchRow fake_row(int id, double v, double w) {
  BatchRow r;
  r.scenario_id = id;
  r.seed = 1000u + static_cast<std::uint64_t>(id);
  r.v = v;
  r.w = w;
  r.robust_star = 1.5e8 + id;
  r.robust_nr = 1.2e8;
  r.nonrobust_star = 1.9e8;
  r.nonrobust_nr = 1.95e8 - 0.125;
  r.min_model_r2 = 0.9912345678901234;
  r.P_B_star = {100.5, 499.5};
  r.P_B_nr = {1.0 / 3.0, 600 - 1.0 / 3.0};
  return r;
}

ScenarioDistribution two_fishery_distribution() {
  ScenarioDistribution d;
  d.k = 2;
  return d;
}

AlgorithmConfig tiny_config() {
  AlgorithmConfig cfg;
  cfg.n_lhs = 8;
  cfg.n_uni = 4;
  cfg.max_samples = 40;
  cfg.n_restarts = 4;
  return cfg;
}

}  // namespace

TEST(Percentile, HandComputedOnOneToFive) {
  const std::vector<double> x{4, 1, 5, 3, 2};
  EXPECT_DOUBLE_EQ(percentile(x, 50), 3.0);
  EXPECT_DOUBLE_EQ(percentile(x, 95), 4.8);
  EXPECT_DOUBLE_EQ(percentile(x, 5), 1.2);
  EXPECT_DOUBLE_EQ(percentile(x, 0), 1.0);
  EXPECT_DOUBLE_EQ(percentile(x, 100), 5.0);
}

TEST(Percentile, RejectsEmptyAndOutOfRange) {
  EXPECT_THROW(percentile({}, 50), std::invalid_argument);
  EXPECT_THROW(percentile({1.0}, 101), std::invalid_argument);
}

TEST(Percentile, FlatValuesGiveFlatTable) {
  std::vector<BatchRow> rows;
  for (int i = 0; i < 7; ++i) rows.push_back(fake_row(i, 0.042, -0.01));
  const auto table = percentile_table(rows);
  ASSERT_EQ(table.size(), 19u);
  for (const auto& p : table) {
    EXPECT_EQ(p.v, 0.042);
    EXPECT_EQ(p.w, -0.01);
  }
}

TEST(Percentile, TableMonotoneAndSkipsFailedRows) {
  std::vector<BatchRow> rows;
  for (int i = 0; i < 25; ++i) rows.push_back(fake_row(i, std::sin(1.7 * i), std::cos(0.9 * i)));
  rows[3].status = "error";
  rows[3].v = 1e6;
  const auto table = percentile_table(rows);
  ASSERT_EQ(table.size(), 19u);
  EXPECT_EQ(table.front().pct, 5);
  EXPECT_EQ(table.back().pct, 95);
  for (std::size_t i = 1; i < table.size(); ++i) {
    EXPECT_LE(table[i - 1].v, table[i].v);
    EXPECT_LE(table[i - 1].w, table[i].w);
  }
  EXPECT_LT(table.back().v, 1.0);
}

TEST(RowsCsv, RoundTripAndRowCount) {
  const fs::path dir = scratch_dir("rows");
  std::vector<BatchRow> rows;
  for (int i = 0; i < 25; ++i) rows.push_back(fake_row(i, 0.01 * i - 0.05, 0.02 * i));
  rows[7].status = "adequacy";
  rows[7].error = "R^2 0.31, \"low\"";
  BatchReport rep{rows, percentile_table(rows)};
  emit_report(rep, dir);
  EXPECT_EQ(count_lines(dir / "rows.csv"), 26);
  EXPECT_EQ(count_lines(dir / "timings.csv"), 26);
  EXPECT_EQ(count_lines(dir / "percentiles.csv"), 20);
  const auto back = read_rows_csv(dir / "rows.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].scenario_id, rows[i].scenario_id);
    EXPECT_EQ(back[i].seed, rows[i].seed);
    EXPECT_EQ(back[i].status, rows[i].status);
    EXPECT_EQ(back[i].error, rows[i].error);
    EXPECT_EQ(back[i].v, rows[i].v);
    EXPECT_EQ(back[i].nonrobust_nr, rows[i].nonrobust_nr);
    EXPECT_EQ(back[i].min_model_r2, rows[i].min_model_r2);
    EXPECT_EQ(back[i].P_B_nr, rows[i].P_B_nr);
  }
  const std::string head = slurp(dir / "rows.csv").substr(0, 200);
  EXPECT_EQ(head.rfind("scenario_id,seed,status,v,w,robust_utility_star,robust_utility_nr,", 0), 0u);
}

TEST(RowsCsv, BadHeaderThrows) {
  const fs::path dir = scratch_dir("badrows");
  std::ofstream(dir / "rows.csv") << "a,b,c\n1,2,3\n";
  EXPECT_THROW(read_rows_csv(dir / "rows.csv"), std::runtime_error);
}

TEST(Charts, SvgHasOnePointPerPercentile) {
  std::vector<std::pair<double, double>> pts;
  for (int p = 5; p <= 95; p += 5) pts.emplace_back(p, 0.001 * p);
  const std::string svg = percentile_svg(pts, "Percentiles of v", "v (%)");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("Percentiles of v"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_THROW(percentile_svg({}, "t", "y"), std::invalid_argument);
}

TEST(Charts, FlatCurveRenders) {
  const std::vector<std::pair<double, double>> pts{{5, 2.0}, {50, 2.0}, {95, 2.0}};
  EXPECT_NO_THROW(percentile_svg(pts, "flat", "v"));
}

TEST(SampleScenario, DeterministicLadderAndBetas) {
  const ScenarioDistribution d;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scenario a = sample_scenario(d, seed);
    const Scenario b = sample_scenario(d, seed);
    ASSERT_EQ(a.k(), 10u);
    EXPECT_EQ(a.fisheries.back().p, 3e9);
    EXPECT_EQ(a.fisheries.front().p, b.fisheries.front().p);
    EXPECT_LT(a.costs.beta_RB, a.costs.beta_BR);
    EXPECT_GE(a.costs.beta_RB, a.costs.beta_BR / 2);
    EXPECT_DOUBLE_EQ(a.costs.beta_BB, (a.costs.beta_BR + a.costs.beta_RB) / 4);
    EXPECT_EQ(a.costs.beta_RR, a.costs.beta_BB);
    EXPECT_EQ(a.costs.c_B, a.costs.c_R);
    EXPECT_EQ(a.blue_budget, 600);
    EXPECT_EQ(a.red_budget, 1000);
    for (std::size_t i = 1; i < a.k(); ++i) {
      const double want = a.fisheries[0].p + i / 9.0 * (3e9 - a.fisheries[0].p);
      EXPECT_NEAR(a.fisheries[i].p, want, 1e-6);
      EXPECT_EQ(a.fisheries[i].r, a.fisheries[0].r);
      EXPECT_EQ(a.fisheries[i].Z, 1.0);
    }
  }
}

TEST(SampleScenario, RangesAndMeans) {
  const ScenarioDistribution d;
  struct Acc {
    std::pair<double, double> range;
    std::vector<double> xs;
  };
  std::vector<Acc> acc{{d.r, {}}, {d.q, {}}, {d.alpha, {}}, {d.gamma, {}}, {d.p1, {}}, {d.c, {}}, {d.beta_BR, {}}};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Scenario s = sample_scenario(d, 5000 + seed);
    const auto& f = s.fisheries.front();
    const double vals[] = {f.r, f.q, f.alpha, f.gamma, f.p, s.costs.c_B, s.costs.beta_BR};
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j].xs.push_back(vals[j]);
  }
  for (const auto& a : acc) {
    const auto [lo, hi] = a.range;
    for (double x : a.xs) {
      EXPECT_GE(x, lo);
      EXPECT_LE(x, hi);
    }
    const double mean = std::accumulate(a.xs.begin(), a.xs.end(), 0.0) / a.xs.size();
    const double se = (hi - lo) / std::sqrt(12.0) / std::sqrt(static_cast<double>(a.xs.size()));
    EXPECT_LE(std::abs(mean - 0.5 * (lo + hi)), 3 * se) << lo << ".." << hi;
  }
}

TEST(ScenarioFiles, IniRoundTrip) {
  const fs::path dir = scratch_dir("ini");
  const Scenario a = sample_scenario(ScenarioDistribution{}, 99);
  save_scenario(a, dir / "s.ini");
  const Scenario b = load_scenario(dir / "s.ini");
  ASSERT_EQ(b.k(), a.k());
  for (std::size_t i = 0; i < a.k(); ++i) {
    EXPECT_EQ(b.fisheries[i].p, a.fisheries[i].p);
    EXPECT_EQ(b.fisheries[i].gamma, a.fisheries[i].gamma);
  }
  EXPECT_EQ(b.costs.beta_RB, a.costs.beta_RB);
  EXPECT_EQ(b.epsilon, a.epsilon);
}

TEST(ScenarioFiles, MissingFileAndBadDistribution) {
  EXPECT_THROW(load_scenario("/nonexistent/none.ini"), std::runtime_error);
  const fs::path dir = scratch_dir("dist");
  std::ofstream(dir / "d.ini") << "[distribution]\nk = 4\nr_min = 0.2\n";
  const auto d = load_distribution(dir / "d.ini");
  EXPECT_EQ(d.k, 4);
  EXPECT_EQ(d.r.first, 0.2);
  EXPECT_EQ(d.r.second, 0.5);
  std::ofstream(dir / "bad.ini") << "[distribution]\nr_min = 0.9\nr_max = 0.1\n";
  EXPECT_THROW(load_distribution(dir / "bad.ini"), std::exception);
}

TEST(ExampleOne, TableAllocationsSumToBudget) {
  const std::vector<double> star{19.31, 22.61, 16.53, 8.82, 56.55, 48.60, 47.62, 15.26, 70.02, 294.68};
  const std::vector<double> nr{16.74, 46.57, 6.45, 0.00, 43.49, 65.93, 49.93, 99.82, 127.71, 143.37};
  EXPECT_NEAR(std::accumulate(star.begin(), star.end(), 0.0), 600.0, 0.01 + 1e-9);
  EXPECT_NEAR(std::accumulate(nr.begin(), nr.end(), 0.0), 600.0, 0.01 + 1e-9);
  const Allocation a = example1_robust_allocation();
  const Allocation b = example1_nonrobust_allocation();
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(a[i], star[i], 2e-5 * 600);
    EXPECT_NEAR(b[i], nr[i], 2e-5 * 600);
  }
  const Scenario sc = example1_scenario();
  EXPECT_EQ(sc.fisheries[0].p, 1517519809.38);
  EXPECT_EQ(sc.costs.beta_BR, 579.56);
  EXPECT_EQ(sc.costs.beta_RB, 451.23);
}

TEST(Batch, SingleScenarioBatchIsOneSolvePair) {
  BatchOptions opt;
  opt.dist = two_fishery_distribution();
  opt.n_scenarios = 1;
  opt.cfg = tiny_config();
  opt.seed = 4;
  const BatchReport rep = run_batch(opt);
  ASSERT_EQ(rep.rows.size(), 1u);
  const std::uint64_t seed = scenario_seed(4, 0);
  const BatchRow direct = run_scenario(sample_scenario(opt.dist, seed), 0, seed, opt.cfg);
  EXPECT_EQ(rep.rows[0].seed, seed);
  EXPECT_EQ(rep.rows[0].status, direct.status);
  EXPECT_EQ(rep.rows[0].v, direct.v);
  EXPECT_EQ(rep.rows[0].P_B_star, direct.P_B_star);
}

TEST(Batch, ScenarioRowIsComplete) {
  const Scenario sc =
      make_ladder_scenario(0.4, 0.0002, 0.8, 1.1, 1.5e9, 3e9, 150000, 200, 150, 2, 600, 1000, 0.1);
  const BatchRow r = run_scenario(sc, 0, 8, tiny_config());
  ASSERT_TRUE(r.ok()) << r.error;
  EXPECT_NEAR(r.v, r.robust_star / r.robust_nr - 1, 1e-12);
  EXPECT_NEAR(r.w, r.v + r.nonrobust_star / r.nonrobust_nr - 1, 1e-12);
  EXPECT_GT(r.min_model_r2, 0.98);
  for (const auto* P : {&r.P_B_star, &r.P_B_nr}) {
    ASSERT_EQ(P->size(), 2u);
    EXPECT_NEAR(std::accumulate(P->begin(), P->end(), 0.0), 600.0, 6e-4);
  }
}

TEST(Batch, ParallelismDoesNotChangeRows) {
  BatchOptions opt;
  opt.dist = two_fishery_distribution();
  opt.n_scenarios = 3;
  opt.cfg = tiny_config();
  opt.seed = 12;
  const fs::path d1 = scratch_dir("serial"), d2 = scratch_dir("parallel");
  emit_report(run_batch(opt), d1);
  opt.parallelism = 2;
  emit_report(run_batch(opt), d2);
  EXPECT_EQ(slurp(d1 / "rows.csv"), slurp(d2 / "rows.csv"));
  EXPECT_EQ(slurp(d1 / "percentiles.csv"), slurp(d2 / "percentiles.csv"));
}

TEST(Batch, AdequacyFailureIsRecordedPerRow) {
  BatchOptions opt;
  opt.dist = two_fishery_distribution();
  opt.n_scenarios = 2;
  opt.cfg = tiny_config();
  opt.cfg.adequacy_r2 = 1.0;
  const BatchReport rep = run_batch(opt);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.status, "adequacy");
    EXPECT_FALSE(r.error.empty());
  }
  EXPECT_TRUE(rep.percentiles.empty());
}

TEST(TraceReport, WritesCsvAndChart) {
  const fs::path dir = scratch_dir("trace");
  std::vector<TraceRecord> trace(3);
  for (int i = 0; i < 3; ++i) {
    trace[i].iteration = i;
    trace[i].source = i == 2 ? "final" : "lhs";
    trace[i].P_B = {300, 300};
    trace[i].objective = 1e6 * (i + 1);
  }
  emit_trace_report(trace, dir);
  EXPECT_EQ(count_lines(dir / "trace.csv"), 4);
  EXPECT_NE(slurp(dir / "convergence.svg").find("<svg"), std::string::npos);
}
