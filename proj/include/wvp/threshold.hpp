#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wvp/panel.hpp"
#include "wvp/regression.hpp"

namespace wvp {

/// V^N level, 1/V and log population.
std::vector<std::string> default_controls();

struct ThresholdSpec {
  std::string outcome = std::string(columns::kOutcome);
  std::string share = std::string(columns::kShare);
  double gamma = 0.5;
  bool include_jump = true;
  std::vector<std::string> controls = default_controls();
  FixedEffectsSpec fe;
  std::string cluster_var;  // empty: entity
};

struct ProfilePoint {
  double gamma = 0.0;
  double ssr = 0.0;
};

/// Regressor names used in threshold fits.
std::string kink_name(std::string_view share);
std::string jump_name(std::string_view share);

/// share, (share - gamma) * 1[share > gamma] and, optionally, 1[share > gamma].
std::vector<Regressor> threshold_regressors(std::span<const double> share, std::string_view name, double gamma,
                                            bool include_jump);

struct ThresholdFit {
  ParameterEstimate beta_L;  // slope at or below gamma
  ParameterEstimate beta_N;  // slope above gamma (beta_L + slope change)
  ParameterEstimate delta;   // level jump at gamma; NaN when not fitted
  double gamma = 0.5;
  double ssr = 0.0;
  bool include_jump = true;
  FitResult fit;
  std::vector<ProfilePoint> profile;
};

ThresholdFit fit_threshold(const PanelDataset& d, const ThresholdSpec& spec);

struct ThresholdSearch {
  double gamma = 0.5;
  double ssr = 0.0;
  std::vector<ProfilePoint> profile;
  std::size_t n_obs = 0;
  std::size_t n_params = 0;  // threshold-model parameters incl. absorbed effects
  double trim = 0.10;
  double grid_step = 0.005;
};

inline constexpr double kDefaultTrim = 0.10;
inline constexpr double kDefaultGridStep = 0.005;

/// Candidate thresholds: distinct empirical quantiles of the share at
/// probabilities trim, trim + step, ..., 1 - trim, restricted to (0, 1).
std::vector<double> threshold_grid(std::vector<double> shares, double trim, double step = kDefaultGridStep);

/// SSR-minimizing threshold over the trimmed grid; exact ties go to the
/// candidate closest to 0.5. spec.gamma is ignored.
ThresholdSearch estimate_threshold(const PanelDataset& d, const ThresholdSpec& spec, double trim = kDefaultTrim,
                                   double step = kDefaultGridStep);

/// -2 ln(1 - sqrt(1 - alpha)).
double lr_critical_value(double alpha);

struct ThresholdInterval {
  double lower = 0.0;
  double upper = 0.0;
  double critical_value = 0.0;
  std::size_t accepted = 0;
};

/// Convex hull of profiled points with n (SSR(g) - SSR_min) / SSR_min <= c(alpha).
ThresholdInterval threshold_confidence_interval(const std::vector<ProfilePoint>& profile, std::size_t n,
                                                double alpha = 0.05);

/// Joint Wald of {slope change = 0, jump = 0}; needs a fit with the jump term.
WaldResult regime_difference_test(const ThresholdFit& tf);

struct LinearityTest {
  double sup_f = 0.0;
  double gamma_at_sup = 0.0;
  double p_value = 1.0;
  int replications = 0;
  std::vector<double> bootstrap_sup_f;
};

/// Sup-F test of "no threshold" with a wild cluster (Rademacher) bootstrap of
/// the linear-model residuals, regressors held fixed. Replication b draws from
/// a stream derived from (seed, b).
LinearityTest bootstrap_linearity_test(const PanelDataset& d, const ThresholdSpec& spec, double trim, int B,
                                       std::uint64_t seed, double step = kDefaultGridStep);

}  // namespace wvp
