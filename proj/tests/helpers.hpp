#pragma once

#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wvp/panel.hpp"

namespace testutil {

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

// Random unbalanced panel with columns y, x1, x2, x3 and an entity-level
// shock; roughly `drop` of the cells are removed.
inline wvp::PanelDataset random_panel(std::uint64_t seed, int n_entities, int n_years, double drop = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  std::vector<std::string> ent;
  std::vector<int> yr;
  std::map<std::string, std::vector<double>> vars;
  std::vector<double> year_fx(static_cast<std::size_t>(n_years));
  for (auto& v : year_fx) v = z(rng);
  for (int i = 0; i < n_entities; ++i) {
    const double a = z(rng);
    for (int t = 0; t < n_years; ++t) {
      if (u(rng) < drop) continue;
      ent.push_back("e" + std::to_string(i));
      yr.push_back(1900 + t);
      const double x1 = z(rng) + 0.5 * a;
      const double x2 = z(rng) + 0.3 * year_fx[static_cast<std::size_t>(t)];
      const double x3 = u(rng);
      vars["x1"].push_back(x1);
      vars["x2"].push_back(x2);
      vars["x3"].push_back(x3);
      vars["y"].push_back(a + year_fx[static_cast<std::size_t>(t)] + 0.7 * x1 - 0.2 * x2 + 1.5 * x3 + z(rng));
    }
  }
  return wvp::PanelDataset::from_rows(ent, yr, std::move(vars));
}

inline wvp::PanelDataset from_csv(const std::string& text) {
  std::istringstream in(text);
  return wvp::load_panel(in);
}

}  // namespace testutil
