#include "patrolrsm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "patrolrsm/optim.hpp"

namespace patrolrsm {

namespace fs = std::filesystem;

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  if (!(pct >= 0.0 && pct <= 100.0)) throw std::invalid_argument("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<PercentileRow> percentile_table(const std::vector<BatchRow>& rows) {
  std::vector<double> v, w;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    v.push_back(r.v);
    w.push_back(r.w);
  }
  std::vector<PercentileRow> out;
  if (v.empty()) return out;
  for (int p = 5; p <= 95; p += 5) out.push_back({p, percentile(v, p), percentile(w, p)});
  return out;
}

AlgorithmConfig desk_config() {
  AlgorithmConfig cfg;
  cfg.max_samples = 100;
  cfg.n_restarts = 10;
  return cfg;
}

std::uint64_t scenario_seed(std::uint64_t batch_seed, int scenario_id) noexcept {
  return optim::mix_seed(batch_seed, static_cast<std::uint64_t>(scenario_id));
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SolveResult traced_solve(const Scenario& sc, const EquilibriumModel& eq, const AlgorithmConfig& cfg,
                         SolveMode mode, const std::optional<fs::path>& path) {
  if (!path) return solve(sc, eq, cfg, mode);
  std::ofstream out(*path);
  if (!out) throw std::runtime_error(fmt::format("cannot write trace {}", path->string()));
  TraceIO io{&out, {}};
  return solve(sc, eq, cfg, mode, &io);
}

}  // namespace

BatchRow run_scenario(const Scenario& sc, int scenario_id, std::uint64_t seed, const AlgorithmConfig& cfg,
                      const std::optional<fs::path>& trace_dir) {
  BatchRow row;
  row.scenario_id = scenario_id;
  row.seed = seed;
  try {
    auto t0 = std::chrono::steady_clock::now();
    const EquilibriumModel eq = build_equilibrium_model(sc, optim::mix_seed(seed, 1));
    row.min_model_r2 = eq.min_r2();
    row.fit_seconds = seconds_since(t0);

    AlgorithmConfig run_cfg = cfg;
    run_cfg.rng_seed = optim::mix_seed(seed, 2);
    const auto trace_path = [&](const char* mode) -> std::optional<fs::path> {
      if (!trace_dir) return std::nullopt;
      return *trace_dir / fmt::format("scenario_{:03d}_{}.jsonl", scenario_id, mode);
    };
    t0 = std::chrono::steady_clock::now();
    const SolveResult robust = traced_solve(sc, eq, run_cfg, SolveMode::Robust, trace_path("robust"));
    row.robust_seconds = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const SolveResult nonrobust = traced_solve(sc, eq, run_cfg, SolveMode::NonRobust, trace_path("nonrobust"));
    row.nonrobust_seconds = seconds_since(t0);

    row.P_B_star = robust.allocation.vector();
    row.P_B_nr = nonrobust.allocation.vector();
    const Metrics m = compute_metrics(robust.allocation, nonrobust.allocation, sc, eq, run_cfg);
    row.v = m.v;
    row.w = m.w;
    row.robust_star = m.robust_solution.pi_B_at_prime;
    row.robust_nr = m.nonrobust_solution.pi_B_at_prime;
    row.nonrobust_star = m.robust_solution.pi_B_at_star;
    row.nonrobust_nr = m.nonrobust_solution.pi_B_at_star;
  } catch (const AdequacyError& e) {
    row.status = "adequacy";
    row.error = e.what();
  } catch (const std::exception& e) {
    row.status = "error";
    row.error = e.what();
  }
  return row;
}

BatchReport run_batch(const BatchOptions& opt) {
  if (opt.n_scenarios < 1) throw std::invalid_argument("n_scenarios must be >= 1");
  opt.dist.validate();
  opt.cfg.validate();
  if (opt.trace_dir) fs::create_directories(*opt.trace_dir);

  BatchReport report;
  report.rows.resize(static_cast<std::size_t>(opt.n_scenarios));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int id = next++; id < opt.n_scenarios; id = next++) {
      const std::uint64_t seed = scenario_seed(opt.seed, id);
      BatchRow row;
      try {
        row = run_scenario(sample_scenario(opt.dist, seed), id, seed, opt.cfg, opt.trace_dir);
      } catch (const std::exception& e) {
        row.scenario_id = id;
        row.seed = seed;
        row.status = "error";
        row.error = e.what();
      }
      report.rows[static_cast<std::size_t>(id)] = std::move(row);
    }
  };
  const int n_threads = std::clamp(opt.parallelism, 1, opt.n_scenarios);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  report.percentiles = percentile_table(report.rows);
  return report;
}

// --- Example 1 -----------------------------------------------------------------

// The printed rows are rounded to cents; the non-robust row sums to 600.01, so both are rescaled.
Allocation example1_robust_allocation() {
  return Allocation::from_weights(std::vector<double>{19.31, 22.61, 16.53, 8.82, 56.55, 48.60, 47.62, 15.26, 70.02, 294.68}, 600.0);
}

Allocation example1_nonrobust_allocation() {
  return Allocation::from_weights(std::vector<double>{16.74, 46.57, 6.45, 0.00, 43.49, 65.93, 49.93, 99.82, 127.71, 143.37}, 600.0);
}

Example1Report run_example1(const Example1Options& opt) {
  const Scenario sc = example1_scenario();
  const EquilibriumModel eq = build_equilibrium_model(sc, opt.cfg.rng_seed);
  Example1Report rep{sc, eq.min_r2(),
                     compute_metrics(example1_robust_allocation(), example1_nonrobust_allocation(), sc, eq, opt.cfg),
                     {}, {}, {}, {}};
  const Metrics& f = rep.fixed;
  const double gap = std::abs(f.robust_solution.pi_B_at_star / f.nonrobust_solution.pi_B_at_star - 1.0);
  rep.table = {
      {"table1_robust_utility_star", f.robust_solution.pi_B_at_prime, 166663708.36},
      {"table1_robust_utility_nr", f.nonrobust_solution.pi_B_at_prime, 130857172.92},
      {"table1_nonrobust_utility_star", f.robust_solution.pi_B_at_star, 196247780.94},
      {"table1_nonrobust_utility_nr", f.nonrobust_solution.pi_B_at_star, 197344455.69},
      {"table1_v", f.v, 0.2736},
      {"table1_w", f.w, std::nullopt},
      {"table1_nonrobust_gap", gap, std::nullopt},
  };
  if (opt.resolve) {
    std::optional<fs::path> robust_path, nr_path;
    if (opt.trace_dir) {
      fs::create_directories(*opt.trace_dir);
      robust_path = *opt.trace_dir / "example1_robust.jsonl";
      nr_path = *opt.trace_dir / "example1_nonrobust.jsonl";
    }
    rep.robust = traced_solve(sc, eq, opt.cfg, SolveMode::Robust, robust_path);
    rep.nonrobust = traced_solve(sc, eq, opt.cfg, SolveMode::NonRobust, nr_path);
    rep.resolved = compute_metrics(rep.robust->allocation, rep.nonrobust->allocation, sc, eq, opt.cfg);
    const Metrics& m = *rep.resolved;
    rep.table.push_back({"resolved_robust_utility_star", m.robust_solution.pi_B_at_prime, 166663708.36});
    rep.table.push_back({"resolved_robust_utility_nr", m.nonrobust_solution.pi_B_at_prime, 130857172.92});
    rep.table.push_back({"resolved_nonrobust_utility_star", m.robust_solution.pi_B_at_star, 196247780.94});
    rep.table.push_back({"resolved_nonrobust_utility_nr", m.nonrobust_solution.pi_B_at_star, 197344455.69});
    rep.table.push_back({"resolved_v", m.v, 0.2736});
    rep.table.push_back({"resolved_w", m.w, std::nullopt});
  }
  return rep;
}

// --- Files -----------------------------------------------------------------------

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw std::runtime_error(fmt::format("error writing {}", path.string()));
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::string joined(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ';';
    s += num(xs[i]);
  }
  return s;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + '"';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

constexpr const char* kRowsHeader =
    "scenario_id,seed,status,v,w,robust_utility_star,robust_utility_nr,nonrobust_utility_star,"
    "nonrobust_utility_nr,min_model_r2,P_B_star,P_B_nr,error";

}  // namespace

void write_rows_csv(const std::vector<BatchRow>& rows, const fs::path& path) {
  auto out = open_out(path);
  out << kRowsHeader << '\n';
  for (const auto& r : rows) {
    out << r.scenario_id << ',' << r.seed << ',' << r.status << ',' << num(r.v) << ',' << num(r.w) << ','
        << num(r.robust_star) << ',' << num(r.robust_nr) << ',' << num(r.nonrobust_star) << ','
        << num(r.nonrobust_nr) << ',' << num(r.min_model_r2) << ',' << joined(r.P_B_star) << ','
        << joined(r.P_B_nr) << ',' << (r.error.empty() ? std::string() : quoted(r.error)) << '\n';
  }
  finish(out, path);
}

std::vector<BatchRow> read_rows_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != split_csv(kRowsHeader)) {
    throw std::runtime_error(fmt::format("{}: unexpected header", path.string()));
  }
  std::vector<BatchRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 13) throw std::runtime_error(fmt::format("{}:{}: expected 13 fields", path.string(), lineno));
    try {
      BatchRow r;
      r.scenario_id = std::stoi(f[0]);
      r.seed = std::stoull(f[1]);
      r.status = f[2];
      r.v = std::stod(f[3]);
      r.w = std::stod(f[4]);
      r.robust_star = std::stod(f[5]);
      r.robust_nr = std::stod(f[6]);
      r.nonrobust_star = std::stod(f[7]);
      r.nonrobust_nr = std::stod(f[8]);
      r.min_model_r2 = std::stod(f[9]);
      r.P_B_star = parse_list(f[10]);
      r.P_B_nr = parse_list(f[11]);
      r.error = f[12];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error(fmt::format("{}:{}: malformed number", path.string(), lineno));
    }
  }
  return rows;
}

std::string percentile_svg(const std::vector<std::pair<double, double>>& points, const std::string& title,
                           const std::string& y_label, const std::string& x_label) {
  if (points.empty()) throw std::invalid_argument("percentile_svg: no points");
  constexpr double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 50;
  double y_lo = points.front().second, y_hi = y_lo;
  for (const auto& p : points) {
    y_lo = std::min(y_lo, p.second);
    y_hi = std::max(y_hi, p.second);
  }
  if (y_hi - y_lo < 1e-12 * std::max(1.0, std::abs(y_hi))) {
    y_lo -= 1.0;
    y_hi += 1.0;
  } else {
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
  }
  const auto sx = [&](double x) { return left + x / 100.0 * (W - left - right); };
  const auto sy = [&](double y) { return H - bottom - (y - y_lo) / (y_hi - y_lo) * (H - top - bottom); };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
      W, H, W, H, W / 2, title);
  s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, H - bottom,
                   W - right);
  s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top, H - bottom);
  for (int p = 0; p <= 100; p += 10) {
    s += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1}\" x2=\"{0:.1f}\" y2=\"{2}\" stroke=\"black\"/>"
        "<text x=\"{0:.1f}\" y=\"{3}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{4}</text>\n",
        sx(p), H - bottom, H - bottom + 5, H - bottom + 18, p);
  }
  for (int t = 0; t <= 5; ++t) {
    const double y = y_lo + (y_hi - y_lo) * t / 5.0;
    s += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.1f}\" x2=\"{2}\" y2=\"{1:.1f}\" stroke=\"#dddddd\"/>"
        "<text x=\"{3}\" y=\"{4:.1f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{5:.2f}</text>\n",
        left, sy(y), W - right, left - 6, sy(y) + 4, y);
  }
  s += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
      W / 2, H - 12, x_label);
  s += fmt::format(
      "<text x=\"16\" y=\"{0}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 16 {0})\">{1}</text>\n",
      H / 2, y_label);
  s += "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    s += fmt::format("{}{:.1f},{:.1f}", i ? " " : "", sx(points[i].first), sy(points[i].second));
  }
  s += "\"/>\n";
  for (const auto& p : points) {
    s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"#1f4e9c\"/>\n", sx(p.first), sy(p.second));
  }
  return s + "</svg>\n";
}

void emit_report(const BatchReport& report, const fs::path& out_dir) {
  if (report.rows.empty()) throw std::invalid_argument("emit_report: empty report");
  fs::create_directories(out_dir);
  write_rows_csv(report.rows, out_dir / "rows.csv");

  {
    const auto path = out_dir / "timings.csv";
    auto out = open_out(path);
    out << "scenario_id,fit_seconds,robust_seconds,nonrobust_seconds\n";
    for (const auto& r : report.rows) {
      out << fmt::format("{},{:.3f},{:.3f},{:.3f}\n", r.scenario_id, r.fit_seconds, r.robust_seconds,
                         r.nonrobust_seconds);
    }
    finish(out, path);
  }

  emit_percentiles(report.percentiles.empty() ? percentile_table(report.rows) : report.percentiles, out_dir);
}

void emit_percentiles(const std::vector<PercentileRow>& table, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  {
    const auto path = out_dir / "percentiles.csv";
    auto out = open_out(path);
    out << "percentile,v,w\n";
    for (const auto& p : table) out << p.pct << ',' << num(p.v) << ',' << num(p.w) << '\n';
    finish(out, path);
  }
  if (table.empty()) return;
  for (const char* metric : {"v", "w"}) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : table) pts.emplace_back(p.pct, 100.0 * (metric[0] == 'v' ? p.v : p.w));
    const auto path = out_dir / fmt::format("percentiles_{}.svg", metric);
    auto out = open_out(path);
    out << percentile_svg(pts, fmt::format("Percentiles of {}", metric), fmt::format("{} (%)", metric));
    finish(out, path);
  }
}

void write_example1(const Example1Report& rep, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto path = out_dir / "example1.csv";
  auto out = open_out(path);
  out << "quantity,computed,reference,relative_difference\n";
  for (const auto& line : rep.table) {
    out << line.quantity << ',' << num(line.computed) << ',';
    if (line.reference) {
      out << num(*line.reference) << ',' << num(line.computed / *line.reference - 1.0);
    } else {
      out << ',';
    }
    out << '\n';
  }
  finish(out, path);

  if (rep.robust && rep.nonrobust) {
    const auto apath = out_dir / "example1_allocations.csv";
    auto a = open_out(apath);
    a << "row";
    for (std::size_t i = 1; i <= rep.scenario.k(); ++i) a << ",fishery_" << i;
    a << '\n';
    const auto put = [&a](const char* name, const Allocation& al) {
      a << name;
      for (double x : al.values()) a << ',' << fmt::format("{:.2f}", x);
      a << '\n';
    };
    put("table1_P_B_star", example1_robust_allocation());
    put("table1_P_B_NR", example1_nonrobust_allocation());
    put("resolved_P_B_star", rep.robust->allocation);
    put("resolved_P_B_NR", rep.nonrobust->allocation);
    finish(a, apath);
  }
}

void emit_trace_report(const std::vector<TraceRecord>& trace, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto path = out_dir / "trace.csv";
  auto out = open_out(path);
  out << "iteration,source,objective,pi_B_at_prime,pi_B_at_star,pi_R_star,pi_R_prime,additive_fallback,P_B\n";
  std::vector<std::pair<double, double>> best;
  double running = -std::numeric_limits<double>::infinity();
  int n = 0;
  for (const auto& r : trace) {
    if (r.source == "cv") continue;
    out << r.iteration << ',' << r.source << ',' << num(r.objective) << ',' << num(r.pi_B_at_prime) << ','
        << num(r.pi_B_at_star) << ',' << num(r.pi_R_star) << ',' << num(r.pi_R_prime) << ','
        << (r.additive_fallback ? 1 : 0) << ',' << joined(r.P_B) << '\n';
    if (r.source == "final") continue;
    running = std::max(running, r.objective);
    best.emplace_back(++n, running);
  }
  finish(out, path);
  if (best.empty()) return;

  // Sample index rescaled onto the chart's 0-100 x axis.
  std::vector<std::pair<double, double>> pts;
  for (const auto& [i, y] : best) pts.emplace_back(100.0 * (i - 1) / std::max(1.0, best.back().first - 1), y / 1e6);
  const auto spath = out_dir / "convergence.svg";
  auto s = open_out(spath);
  s << percentile_svg(pts, fmt::format("Best objective over {} samples", best.size()), "objective ($M)",
                      "position in run (% of samples)");
  finish(s, spath);
}

}  // namespace patrolrsm
