#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wvp/panel.hpp"

namespace wvp {

struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<std::size_t> rows;  // dataset row behind each observation (may be empty)
  // Norms of the centered columns before fixed effects were swept out (may be
  // empty). A column that lost all but 1e-8 of it is treated as absorbed.
  std::vector<double> reference_norms;
};

enum class CovarianceKind { Classical, Cluster };

struct ParameterEstimate {
  double estimate = kMissing;
  double se = kMissing;
};

/// Least-squares fit over a named design. Aliased columns keep their slot in
/// `names` but carry a NaN coefficient and NaN covariance row/column.
struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  std::vector<bool> aliased;
  std::vector<std::string> warnings;

  Eigen::VectorXd residuals;
  std::vector<std::size_t> rows;
  double ssr = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_params = 0;  // retained regressors
  std::size_t rank = 0;

  // Fixed effects absorbed before the fit. `absorbed_df` is the rank of the
  // indicator set; `entity_codes` lets the sandwich drop entity effects that
  // are nested in the clusters from the small-sample correction.
  std::size_t absorbed_df = 0;
  std::size_t entity_df = 0;
  std::vector<int> entity_codes;

  Eigen::MatrixXd covariance;
  CovarianceKind covariance_kind = CovarianceKind::Classical;
  std::size_t cluster_count = 0;

  // Retained design and (X'X)^-1 over the retained columns.
  Eigen::MatrixXd design;
  Eigen::MatrixXd bread;
  std::vector<Eigen::Index> kept;

  std::optional<Eigen::Index> find(std::string_view name) const;
  Eigen::Index index(std::string_view name) const;  // throws MissingCoefficient
  bool is_aliased(std::string_view name) const { return aliased[static_cast<std::size_t>(index(name))]; }
  double coef(std::string_view name) const { return coefficients(index(name)); }
  double se(std::string_view name) const;
  double residual_df() const;
};

/// Pivoted-QR least squares. After scaling columns to unit norm, columns whose
/// pivot falls below 1e-10 of the largest are flagged aliased and excluded.
FitResult ols_fit(const DesignMatrix& X, const Eigen::VectorXd& y, std::size_t absorbed_df = 0);

/// Norms of the mean-centered columns of `m`.
std::vector<double> centered_norms(const Eigen::MatrixXd& m);

/// Column weights for rank decisions: 1/norm, or 0 for an all-zero column or
/// one whose norm fell below 1e-8 of `reference_norms` (absorbed by fixed
/// effects). Rank is then decided on the weighted matrix.
Eigen::VectorXd rank_weights(const Eigen::MatrixXd& x, const std::vector<double>& reference_norms = {});

/// CR1 cluster-robust sandwich. `cluster_ids` has one entry per estimation
/// row; NaN is a missing id.
Eigen::MatrixXd cluster_covariance(const FitResult& fit, std::span<const double> cluster_ids,
                                   std::size_t* cluster_count = nullptr);

/// Replaces the fit's covariance with the cluster-robust one.
void apply_cluster_covariance(FitResult& fit, std::span<const double> cluster_ids);

/// sum_k weight_k * coef_k with its standard error.
using LinearCombination = std::vector<std::pair<std::string, double>>;
ParameterEstimate linear_combination(const FitResult& fit, const LinearCombination& terms);

struct LinearRestriction {
  LinearCombination terms;
  double value = 0.0;
};

struct WaldResult {
  double f = kMissing;
  int df1 = 0;
  double df2 = kMissing;
  double p_value = kMissing;
  bool zero_variance = false;  // R V R' is exactly zero; F undefined
  bool vacuous = false;        // no restrictions
};

/// F = (Rb - r)' [R V R']^-1 (Rb - r) / q with denominator df G-1 under a
/// cluster covariance (n - K otherwise).
WaldResult wald_test(const FitResult& fit, const Eigen::MatrixXd& R, const Eigen::VectorXd& r);
WaldResult wald_test(const FitResult& fit, const std::vector<LinearRestriction>& restrictions);
/// Joint test that every named coefficient is zero.
WaldResult wald_test_zero(const FitResult& fit, const std::vector<std::string>& names);

double f_upper_tail(double f, double df1, double df2);

struct Residualized {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<std::size_t> rows;
};

/// Residuals of each target on (controls + fixed effects) over the shared
/// complete-case sample. No intercept is added when fixed effects are off.
Residualized fwl_residualize(const PanelDataset& d, const std::vector<std::string>& targets,
                             const std::vector<std::string>& controls, const FixedEffectsSpec& fe);

// ---------------------------------------------------------------------------
// Panel model assembly shared by the estimators.

struct Regressor {
  std::string name;
  std::vector<double> values;  // one per dataset row, NaN = missing
};

struct PanelModel {
  std::string outcome = std::string(columns::kOutcome);
  std::vector<Regressor> regressors;
  std::vector<std::string> controls;  // dataset columns appended after regressors
  FixedEffectsSpec fe;
  bool cluster = true;
  std::string cluster_var;  // empty: cluster by entity
};

/// Complete-case sample, within transformation, OLS and (optionally) the
/// cluster-robust covariance. Without fixed effects a "const" column is added.
FitResult fit_panel_model(const PanelDataset& d, const PanelModel& model);

/// Complete-case rows a model would use.
std::vector<std::size_t> model_sample(const PanelDataset& d, const PanelModel& model);

/// Rank of the absorbed indicator set and the share attributable to entities.
std::pair<std::size_t, std::size_t> fixed_effect_df(const kernels::Groups& groups, const FixedEffectsSpec& fe);

}  // namespace wvp
