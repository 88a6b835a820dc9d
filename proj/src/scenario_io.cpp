#include "patrolrsm/scenario_io.hpp"

#include <random>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace patrolrsm {

namespace pt = boost::property_tree;

void ScenarioDistribution::validate() const {
  for (const auto& [name, range] : {std::pair{"r", r}, std::pair{"q", q}, std::pair{"alpha", alpha},
                                    std::pair{"gamma", gamma}, std::pair{"p1", p1}, std::pair{"c", c},
                                    std::pair{"beta_BR", beta_BR}}) {
    if (!(range.first <= range.second) || range.first < 0.0) {
      throw std::invalid_argument(fmt::format("distribution range for {} is invalid", name));
    }
  }
  if (!(r.first > 0.0 && q.first > 0.0 && alpha.first > 0.0 && gamma.first > 0.0 && p1.first > 0.0)) {
    throw std::invalid_argument("distribution ranges for r, q, alpha, gamma, p1 must be positive");
  }
  if (k < 1) throw std::invalid_argument("distribution k must be >= 1");
  if (!(P_B_tot > 0.0 && P_R_tot > 0.0 && Z > 0.0 && p_max > 0.0 && epsilon >= 0.0)) {
    throw std::invalid_argument("distribution budgets, Z and p_max must be positive, epsilon >= 0");
  }
}

std::vector<double> price_ladder(double p1, double p_max, int k) {
  std::vector<double> p(static_cast<std::size_t>(k), p1);
  if (k == 1) return p;
  for (int i = 1; i < k; ++i) {
    p[static_cast<std::size_t>(i)] = p1 + static_cast<double>(i) / (k - 1) * (p_max - p1);
  }
  p.back() = p_max;
  return p;
}

Scenario make_ladder_scenario(double r, double q, double alpha, double gamma, double p1, double p_max,
                              double c, double beta_BR, double beta_RB, int k, double P_B_tot,
                              double P_R_tot, double epsilon, double Z) {
  Scenario sc;
  for (double p : price_ladder(p1, p_max, k)) sc.fisheries.push_back({r, Z, q, alpha, gamma, p});
  const double offset = (beta_BR + beta_RB) / 4.0;
  sc.costs = {c, c, beta_BR, beta_RB, offset, offset};
  sc.blue_budget = P_B_tot;
  sc.red_budget = P_R_tot;
  sc.epsilon = epsilon;
  sc.validate();
  return sc;
}

Scenario sample_scenario(const ScenarioDistribution& dist, std::uint64_t seed) {
  dist.validate();
  std::mt19937_64 rng(seed);
  const auto draw = [&rng](const std::pair<double, double>& range) {
    return std::uniform_real_distribution<double>(range.first, range.second)(rng);
  };
  const double r = draw(dist.r);
  const double q = draw(dist.q);
  const double alpha = draw(dist.alpha);
  const double gamma = draw(dist.gamma);
  const double p1 = draw(dist.p1);
  const double c = draw(dist.c);
  const double beta_BR = draw(dist.beta_BR);
  const double beta_RB = draw({beta_BR / 2.0, beta_BR});
  return make_ladder_scenario(r, q, alpha, gamma, p1, dist.p_max, c, beta_BR, beta_RB, dist.k,
                              dist.P_B_tot, dist.P_R_tot, dist.epsilon, dist.Z);
}

Scenario example1_scenario() {
  return make_ladder_scenario(0.36, 0.00015, 0.91, 1.06, 1517519809.38, 3e9, 141995.48, 579.56, 451.23,
                              10, 600.0, 1000.0, 0.10);
}

Scenario load_scenario(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error(fmt::format("cannot read scenario {}: {}", path.string(), e.message()));
  }
  try {
    Scenario sc;
    const auto& s = tree.get_child("scenario");
    sc.blue_budget = s.get<double>("P_B_tot");
    sc.red_budget = s.get<double>("P_R_tot");
    sc.epsilon = s.get<double>("epsilon", 0.10);
    sc.costs.c_B = s.get<double>("c_B");
    sc.costs.c_R = s.get<double>("c_R");
    sc.costs.beta_BR = s.get<double>("beta_BR");
    sc.costs.beta_RB = s.get<double>("beta_RB");
    sc.costs.beta_BB = s.get<double>("beta_BB");
    sc.costs.beta_RR = s.get<double>("beta_RR");
    const int k = s.get<int>("k", 0);
    for (int i = 1;; ++i) {
      const auto f = tree.get_child_optional(pt::ptree::path_type(fmt::format("fishery.{}", i), '/'));
      if (!f) break;
      sc.fisheries.push_back({f->get<double>("r"), f->get<double>("Z", 1.0), f->get<double>("q"),
                              f->get<double>("alpha", 1.0), f->get<double>("gamma", 1.0),
                              f->get<double>("p")});
    }
    if (k != 0 && static_cast<std::size_t>(k) != sc.fisheries.size()) {
      throw std::invalid_argument(fmt::format("k = {} but {} [fishery.N] sections found", k,
                                              sc.fisheries.size()));
    }
    sc.validate();
    return sc;
  } catch (const pt::ptree_error& e) {
    throw std::runtime_error(fmt::format("bad scenario file {}: {}", path.string(), e.what()));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(fmt::format("bad scenario file {}: {}", path.string(), e.what()));
  }
}

void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
  pt::ptree tree;
  const auto put = [&tree](const std::string& key, double v) { tree.put(key, fmt::format("{}", v)); };
  tree.put("scenario.k", sc.k());
  put("scenario.P_B_tot", sc.blue_budget);
  put("scenario.P_R_tot", sc.red_budget);
  put("scenario.epsilon", sc.epsilon);
  put("scenario.c_B", sc.costs.c_B);
  put("scenario.c_R", sc.costs.c_R);
  put("scenario.beta_BR", sc.costs.beta_BR);
  put("scenario.beta_RB", sc.costs.beta_RB);
  put("scenario.beta_BB", sc.costs.beta_BB);
  put("scenario.beta_RR", sc.costs.beta_RR);
  for (std::size_t i = 0; i < sc.k(); ++i) {
    const auto& f = sc.fisheries[i];
    // '.' is ptree's path separator; the INI section name is the literal "fishery.N".
    pt::ptree fish;
    for (const auto& [key, v] : {std::pair{"r", f.r}, std::pair{"Z", f.Z}, std::pair{"q", f.q},
                                 std::pair{"alpha", f.alpha}, std::pair{"gamma", f.gamma},
                                 std::pair{"p", f.p}}) {
      fish.put(key, fmt::format("{}", v));
    }
    tree.put_child(pt::ptree::path_type(fmt::format("fishery.{}", i + 1), '/'), fish);
  }
  try {
    pt::write_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error(fmt::format("cannot write scenario {}: {}", path.string(), e.message()));
  }
}

ScenarioDistribution load_distribution(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error(fmt::format("cannot read distribution {}: {}", path.string(), e.message()));
  }
  ScenarioDistribution d;
  const auto s = tree.get_child_optional("distribution");
  if (!s) throw std::runtime_error(fmt::format("{}: missing [distribution] section", path.string()));
  const auto range = [&](const std::string& name, std::pair<double, double>& r) {
    r.first = s->get<double>(name + "_min", r.first);
    r.second = s->get<double>(name + "_max", r.second);
  };
  try {
    range("r", d.r);
    range("q", d.q);
    range("alpha", d.alpha);
    range("gamma", d.gamma);
    range("p1", d.p1);
    range("c", d.c);
    range("beta_BR", d.beta_BR);
    d.p_max = s->get<double>("p_max", d.p_max);
    d.P_B_tot = s->get<double>("P_B_tot", d.P_B_tot);
    d.P_R_tot = s->get<double>("P_R_tot", d.P_R_tot);
    d.k = s->get<int>("k", d.k);
    d.epsilon = s->get<double>("epsilon", d.epsilon);
    d.Z = s->get<double>("Z", d.Z);
    d.validate();
  } catch (const pt::ptree_error& e) {
    throw std::runtime_error(fmt::format("bad distribution file {}: {}", path.string(), e.what()));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(fmt::format("bad distribution file {}: {}", path.string(), e.what()));
  }
  return d;
}

}  // namespace patrolrsm
