#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wvp/panel.hpp"
#include "wvp/regression.hpp"

namespace wvp {

struct DistributedLagSpec {
  std::string outcome = std::string(columns::kOutcome);
  std::string share = std::string(columns::kShare);
  int n_leads = 6;
  int n_lags = 6;
  std::optional<double> regime_split;  // gamma; switches on per-lag regime terms
  bool include_jumps = false;          // regime model only
  std::vector<std::string> controls;
  FixedEffectsSpec fe;
  std::string cluster_var;
};

enum class PathKind { Instantaneous, Cumulative };
enum class Regime { Landowner, Nonagrarian };

/// Event-time path normalized to zero (estimate and variance) at horizon -1.
struct EventStudyPath {
  std::vector<int> horizons;
  std::vector<double> estimate;
  std::vector<double> variance;
  int normalization_horizon = -1;
  PathKind kind = PathKind::Instantaneous;

  double se(std::size_t i) const;
  double lower95(std::size_t i) const;
  double upper95(std::size_t i) const;
  std::optional<std::size_t> find(int horizon) const;
};

inline constexpr double kZ95 = 1.96;

/// Sample bookkeeping for a lead/lag model.
struct SampleShrink {
  std::size_t n_contemporaneous = 0;  // complete cases with no leads or lags
  std::size_t n_used = 0;
};

/// y on share.lead{n_leads..1}, share, share.lag{1..n_lags} + controls + FE
/// with cluster-robust covariance. regime_split must be unset.
FitResult fit_distributed_lag(const PanelDataset& d, const DistributedLagSpec& spec, SampleShrink* shrink = nullptr);

/// Cumulative reparametrization of the lead/lag coefficients. Horizons run
/// from -(n_leads + 1) to n_lags.
EventStudyPath to_event_study(const FitResult& dl, std::string_view share, int n_leads, int n_lags);

/// Regime-specific distributed lag: for j = 0..n_lags the terms s_{t-j} and
/// (s_{t-j} - gamma) * 1[s_{t-j} > gamma]; no leads.
FitResult fit_regime_distributed_lag(const PanelDataset& d, const DistributedLagSpec& spec,
                                     SampleShrink* shrink = nullptr);

/// Cumulative effect path for one regime, horizons -1..n_lags.
EventStudyPath cumulative_effects(const FitResult& rf, Regime regime, std::string_view share, int n_lags);

struct PretrendResult {
  std::vector<std::string> names;
  std::vector<ParameterEstimate> leads;  // lead1..leadK
  WaldResult joint;
  FitResult fit;
};

/// Regime model augmented with linear share leads 1..extra_leads and the joint
/// test that all lead coefficients are zero.
PretrendResult pretrend_test(const PanelDataset& d, const DistributedLagSpec& spec, int extra_leads);

/// Column name of the slope-change term for lag j.
std::string regime_kink_name(std::string_view share, int lag);
std::string regime_jump_name(std::string_view share, int lag);

}  // namespace wvp
