#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "patrolrsm/bioeconomics.hpp"

namespace patrolrsm {

/// Uniform ranges for random scenarios. Every fishery of a scenario shares the
/// drawn biology; prices rise linearly from p1 to p_max across fisheries.
struct ScenarioDistribution {
  std::pair<double, double> r{0.3, 0.5};
  std::pair<double, double> q{0.0001, 0.0003};
  std::pair<double, double> alpha{0.5, 1.5};
  std::pair<double, double> gamma{0.5, 1.5};
  std::pair<double, double> p1{1e9, 2e9};
  double p_max = 3e9;
  std::pair<double, double> c{1e5, 2e5};
  std::pair<double, double> beta_BR{150.0, 600.0};
  double P_B_tot = 600.0;
  double P_R_tot = 1000.0;
  int k = 10;
  double epsilon = 0.10;
  double Z = 1.0;

  void validate() const;
};

/// Linear price ladder p_i = p1 + (i-1)/(k-1) (p_max - p1).
std::vector<double> price_ladder(double p1, double p_max, int k);

/// Draws one scenario; beta_RB ~ U(beta_BR/2, beta_BR), beta_BB = beta_RR = (beta_BR + beta_RB)/4.
Scenario sample_scenario(const ScenarioDistribution& dist, std::uint64_t seed);

/// Shared-biology scenario from the scalar parameters that define it.
Scenario make_ladder_scenario(double r, double q, double alpha, double gamma, double p1, double p_max,
                              double c, double beta_BR, double beta_RB, int k, double P_B_tot,
                              double P_R_tot, double epsilon, double Z = 1.0);

/// The ten-fishery Example 1 instance.
Scenario example1_scenario();

/// INI scenario files: a [scenario] section with P_B_tot, P_R_tot, epsilon and the
/// cost keys c_B, c_R, beta_BR, beta_RB, beta_BB, beta_RR, then one [fishery.N]
/// section per fishery (N = 1..k) with r, Z, q, alpha, gamma, p.
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& sc, const std::filesystem::path& path);

/// INI distribution files: a [distribution] section; ranges are written as
/// r_min / r_max and so on. Missing keys keep their defaults.
ScenarioDistribution load_distribution(const std::filesystem::path& path);

}  // namespace patrolrsm
