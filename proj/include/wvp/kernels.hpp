#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

// Data-parallel inner loops. Every kernel here has a plain serial twin in
// wvp::kernels::reference that the tests compare against; the OpenMP versions
// partition work so that each output element is accumulated in the same order
// as the serial version, which keeps results bit-identical for any thread count.

namespace wvp::kernels {

/// Dense group codes for the rows of an estimation sample.
struct Groups {
  std::vector<int> entity;  // 0 .. n_entities-1
  std::vector<int> period;  // 0 .. n_periods-1
  int n_entities = 0;
  int n_periods = 0;

  std::size_t size() const { return entity.size(); }
};

struct DemeanOptions {
  bool entity = true;
  bool time = true;
  // Largest group mean removed in a sweep, measured on the column scaled by a
  // power of two so that its largest |value| lies in [0.5, 1).
  double tolerance = 1e-10;
  // Once converged, sweeps continue while the change keeps shrinking and stays
  // above this, so that the within residue sits well under the rank tolerance.
  double polish_tolerance = 1e-15;
  int max_iterations = 10000;
};

/// Power of two that brings max |x| into [0.5, 1); 1 for an all-zero column.
double column_scale(const double* x, std::size_t n);

struct DemeanStats {
  int iterations = 0;  // largest sweep count over columns
  bool converged = true;
};

/// Alternating-projection demeaning of each column in place. A sweep subtracts
/// entity means then period means; a column has converged once the largest
/// absolute adjustment in a sweep drops below the tolerance.
DemeanStats demean(Eigen::Ref<Eigen::MatrixXd> columns, const Groups& groups, const DemeanOptions& opts);

/// Per-cluster score sums X_g' e_g, one row per cluster.
Eigen::MatrixXd cluster_scores(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                               std::span<const int> cluster, int n_clusters);

/// Number of OpenMP threads kernels will use (1 without OpenMP).
int max_threads();
void set_threads(int n);

namespace reference {

DemeanStats demean(Eigen::Ref<Eigen::MatrixXd> columns, const Groups& groups, const DemeanOptions& opts);

Eigen::MatrixXd cluster_scores(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                               std::span<const int> cluster, int n_clusters);

}  // namespace reference

}  // namespace wvp::kernels
