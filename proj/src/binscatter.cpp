#include "wvp/binscatter.hpp"

#include <algorithm>
#include <numeric>

#include "wvp/error.hpp"
#include "wvp/regression.hpp"

namespace wvp {

BinLine fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  BinLine line;
  line.n_bins = x.size();
  if (x.size() < 2) return line;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) return line;
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  line.defined = true;
  return line;
}

BinnedScatter binscatter(const PanelDataset& d, const std::string& y_var, const std::string& x_var,
                         const std::vector<std::string>& controls, const FixedEffectsSpec& fe, int n_bins,
                         double split_at) {
  if (n_bins < 2) fail(Errc::InvalidArgument, "binscatter needs at least two bins");

  PanelDataset data = d;
  std::vector<std::string> ctrl = controls;
  if (!fe.any() && !controls.empty()) {
    // residualizing on controls alone needs an intercept
    ctrl.emplace_back("(const)");
    data = data.with_column("(const)", std::vector<double>(d.n_rows(), 1.0), "binscatter");
  }
  const auto res = fwl_residualize(data, {y_var, x_var}, ctrl, fe);
  const auto n = res.rows.size();
  if (n < static_cast<std::size_t>(n_bins)) {
    fail(Errc::TooFewObservations, std::to_string(n) + " observations for " + std::to_string(n_bins) + " bins");
  }

  // Shift the adjusted variables back to the raw sample means.
  const auto y_raw = d.column(y_var);
  const auto x_raw = d.column(x_var);
  double y_mean = 0.0, x_mean = 0.0;
  for (auto r : res.rows) {
    y_mean += y_raw[r];
    x_mean += x_raw[r];
  }
  y_mean /= static_cast<double>(n);
  x_mean /= static_cast<double>(n);
  const bool adjusted = fe.any() || !controls.empty();

  std::vector<double> ya(n), xa(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    ya[i] = adjusted ? res.values(ii, 0) - res.values.col(0).mean() + y_mean : res.values(ii, 0);
    xa[i] = adjusted ? res.values(ii, 1) - res.values.col(1).mean() + x_mean : res.values(ii, 1);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xa[a] < xa[b]; });

  BinnedScatter out;
  out.n_bins = n_bins;
  out.n_obs = n;
  out.split_point = split_at;
  const auto nb = static_cast<std::size_t>(n_bins);
  const std::size_t base = n / nb;
  const std::size_t extra = n % nb;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t count = base + (b < extra ? 1 : 0);
    Bin bin;
    bin.count = count;
    for (std::size_t k = 0; k < count; ++k, ++pos) {
      bin.x_mean += xa[order[pos]];
      bin.y_mean += ya[order[pos]];
    }
    bin.x_mean /= static_cast<double>(count);
    bin.y_mean /= static_cast<double>(count);
    out.bins.push_back(bin);
  }

  std::vector<double> xb, yb, xt, yt;
  for (const auto& bin : out.bins) {
    if (bin.x_mean <= split_at) {
      xb.push_back(bin.x_mean);
      yb.push_back(bin.y_mean);
    } else {
      xt.push_back(bin.x_mean);
      yt.push_back(bin.y_mean);
    }
  }
  out.below = fit_line(xb, yb);
  out.above = fit_line(xt, yt);
  out.empty_side = xb.size() < 2 || xt.size() < 2;
  return out;
}

}  // namespace wvp
