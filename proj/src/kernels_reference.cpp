// Straightforward serial versions of the kernels, kept for testing and
// benchmarking. They accumulate in ascending row order, like the parallel ones.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "wvp/kernels.hpp"

namespace wvp::kernels::reference {

namespace {

double subtract_means(Eigen::Ref<Eigen::VectorXd> x, const std::vector<int>& code) {
  std::map<int, std::pair<double, double>> acc;  // code -> (sum, count)
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    auto& [sum, count] = acc[code[i]];
    sum += x(i);
    count += 1.0;
  }
  std::map<int, double> mean;
  double largest = 0.0;
  for (const auto& [g, sc] : acc) {
    mean[g] = sc.first * (1.0 / sc.second);
    largest = std::max(largest, std::abs(mean[g]));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) -= mean[code[i]];
  return largest;
}

}  // namespace

DemeanStats demean(Eigen::Ref<Eigen::MatrixXd> columns, const Groups& groups, const DemeanOptions& opts) {
  DemeanStats stats;
  if (columns.rows() == 0 || (!opts.entity && !opts.time)) return stats;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::VectorXd x = columns.col(j);
    const double scale = column_scale(x.data(), static_cast<std::size_t>(x.size()));
    x /= scale;
    int it = 0;
    double previous = std::numeric_limits<double>::infinity();
    for (;;) {
      ++it;
      double change = 0.0;
      if (opts.entity) change = std::max(change, subtract_means(x, groups.entity));
      if (opts.time) change = std::max(change, subtract_means(x, groups.period));
      if (!(opts.entity && opts.time)) break;
      if (previous < opts.tolerance && (change <= opts.polish_tolerance || change >= previous)) break;
      if (it >= opts.max_iterations) {
        if (change >= opts.tolerance) stats.converged = false;
        break;
      }
      previous = change;
    }
    columns.col(j) = x * scale;
    stats.iterations = std::max(stats.iterations, it);
  }
  return stats;
}

Eigen::MatrixXd cluster_scores(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                               std::span<const int> cluster, int n_clusters) {
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n_clusters, X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) scores.row(cluster[i]) += X.row(i) * residuals(i);
  return scores;
}

}  // namespace wvp::kernels::reference
