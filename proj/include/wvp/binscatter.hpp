#pragma once

#include <string>
#include <vector>

#include "wvp/panel.hpp"

namespace wvp {

struct Bin {
  double x_mean = 0.0;
  double y_mean = 0.0;
  std::size_t count = 0;
};

struct BinLine {
  double intercept = kMissing;
  double slope = kMissing;
  std::size_t n_bins = 0;
  bool defined = false;
};

struct BinnedScatter {
  std::vector<Bin> bins;  // ordered by x_mean
  double split_point = 0.5;
  BinLine below;          // bins with x_mean <= split_point
  BinLine above;
  int n_bins = 0;
  std::size_t n_obs = 0;
  bool empty_side = false;  // a side had fewer than two bins
};

/// Covariate-adjusted binned scatter. y and x are residualized on the controls
/// and fixed effects, then shifted back by their sample means; observations
/// are sorted by adjusted x (ties keep input order) and cut into equal-count
/// bins with the remainder spread over the leftmost bins. Each side of the
/// split gets an unweighted OLS line through its bin means.
BinnedScatter binscatter(const PanelDataset& d, const std::string& y_var, const std::string& x_var,
                         const std::vector<std::string>& controls, const FixedEffectsSpec& fe, int n_bins,
                         double split_at);

/// Unweighted OLS line through (x, y) points; undefined with fewer than two
/// points or no spread in x.
BinLine fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace wvp
