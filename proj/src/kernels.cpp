#include "wvp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

namespace wvp::kernels {

namespace {

// Subtracts group means from one column; returns the largest |mean| removed.
double sweep_groups(double* x, std::size_t n, const std::vector<int>& code, const std::vector<double>& inv_count,
                    std::vector<double>& sums) {
  std::fill(sums.begin(), sums.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) sums[code[i]] += x[i];
  double largest = 0.0;
  for (std::size_t g = 0; g < sums.size(); ++g) {
    sums[g] *= inv_count[g];
    largest = std::max(largest, std::abs(sums[g]));
  }
  for (std::size_t i = 0; i < n; ++i) x[i] -= sums[code[i]];
  return largest;
}

std::vector<double> inverse_counts(const std::vector<int>& code, int n_groups) {
  std::vector<double> count(static_cast<std::size_t>(n_groups), 0.0);
  for (int c : code) count[c] += 1.0;
  for (auto& c : count) c = c > 0.0 ? 1.0 / c : 0.0;
  return count;
}

}  // namespace

double column_scale(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
  if (m == 0.0 || !std::isfinite(m)) return 1.0;
  int e = 0;
  std::frexp(m, &e);
  return std::ldexp(1.0, e);
}

DemeanStats demean(Eigen::Ref<Eigen::MatrixXd> columns, const Groups& groups, const DemeanOptions& opts) {
  const auto n = static_cast<std::size_t>(columns.rows());
  const auto k = static_cast<int>(columns.cols());
  DemeanStats stats;
  if (n == 0 || k == 0 || (!opts.entity && !opts.time)) return stats;

  const auto inv_e = opts.entity ? inverse_counts(groups.entity, groups.n_entities) : std::vector<double>{};
  const auto inv_t = opts.time ? inverse_counts(groups.period, groups.n_periods) : std::vector<double>{};
  const bool two_way = opts.entity && opts.time;

  std::vector<int> iterations(static_cast<std::size_t>(k), 0);
  std::vector<char> converged(static_cast<std::size_t>(k), 1);

#pragma omp parallel
  {
    std::vector<double> sums_e(inv_e.size());
    std::vector<double> sums_t(inv_t.size());
#pragma omp for schedule(static)
    for (int j = 0; j < k; ++j) {
      double* x = columns.col(j).data();
      const double scale = column_scale(x, n);
      for (std::size_t i = 0; i < n; ++i) x[i] /= scale;
      int it = 0;
      double previous = std::numeric_limits<double>::infinity();
      for (;;) {
        ++it;
        double change = 0.0;
        if (opts.entity) change = std::max(change, sweep_groups(x, n, groups.entity, inv_e, sums_e));
        if (opts.time) change = std::max(change, sweep_groups(x, n, groups.period, inv_t, sums_t));
        if (!two_way) break;
        if (previous < opts.tolerance && (change <= opts.polish_tolerance || change >= previous)) break;
        if (it >= opts.max_iterations) {
          converged[j] = change < opts.tolerance;
          break;
        }
        previous = change;
      }
      for (std::size_t i = 0; i < n; ++i) x[i] *= scale;
      iterations[j] = it;
    }
  }

  stats.iterations = *std::max_element(iterations.begin(), iterations.end());
  stats.converged = std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
  return stats;
}

Eigen::MatrixXd cluster_scores(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                               std::span<const int> cluster, int n_clusters) {
  const auto n = static_cast<std::size_t>(X.rows());
  // Bucket rows by cluster (counting sort keeps ascending row order per bucket).
  std::vector<std::size_t> offset(static_cast<std::size_t>(n_clusters) + 1, 0);
  for (std::size_t i = 0; i < n; ++i) ++offset[cluster[i] + 1];
  for (int g = 0; g < n_clusters; ++g) offset[g + 1] += offset[g];
  std::vector<std::size_t> rows(n);
  {
    auto cursor = offset;
    for (std::size_t i = 0; i < n; ++i) rows[cursor[cluster[i]]++] = i;
  }

  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n_clusters, X.cols());
#pragma omp parallel for schedule(static)
  for (int g = 0; g < n_clusters; ++g) {
    for (std::size_t p = offset[g]; p < offset[g + 1]; ++p) {
      const auto i = static_cast<Eigen::Index>(rows[p]);
      scores.row(g) += X.row(i) * residuals(i);
    }
  }
  return scores;
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace wvp::kernels
