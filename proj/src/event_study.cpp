#include "wvp/event_study.hpp"

#include <cmath>

#include "wvp/error.hpp"

namespace wvp {

double EventStudyPath::se(std::size_t i) const { return std::sqrt(std::max(variance[i], 0.0)); }
double EventStudyPath::lower95(std::size_t i) const { return estimate[i] - kZ95 * se(i); }
double EventStudyPath::upper95(std::size_t i) const { return estimate[i] + kZ95 * se(i); }

std::optional<std::size_t> EventStudyPath::find(int horizon) const {
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] == horizon) return i;
  }
  return std::nullopt;
}

std::string regime_kink_name(std::string_view share, int lag) { return lag_name(share, lag) + ".kink"; }
std::string regime_jump_name(std::string_view share, int lag) { return lag_name(share, lag) + ".jump"; }

namespace {

Regressor from_column(const PanelDataset& d, const std::string& name) {
  const auto c = d.column(name);
  return {name, std::vector<double>(c.begin(), c.end())};
}

PanelModel make_model(const DistributedLagSpec& spec) {
  PanelModel m;
  m.outcome = spec.outcome;
  m.controls = spec.controls;
  m.fe = spec.fe;
  m.cluster = true;
  m.cluster_var = spec.cluster_var;
  return m;
}

void check_counts(const DistributedLagSpec& spec) {
  if (spec.n_leads < 0 || spec.n_lags < 0) fail(Errc::InvalidArgument, "lead/lag counts must be non-negative");
}

// Appends s_{t-j}, the slope-change term and (optionally) the jump for each lag.
void add_regime_terms(const PanelDataset& d, const DistributedLagSpec& spec, PanelModel& model) {
  const double gamma = *spec.regime_split;
  if (!(gamma > 0.0 && gamma < 1.0)) fail(Errc::InvalidArgument, "regime split must lie in (0, 1)");
  for (int j = 0; j <= spec.n_lags; ++j) {
    const auto base = lag_name(spec.share, j);
    const auto s = d.column(base);
    Regressor kink{regime_kink_name(spec.share, j), std::vector<double>(s.size(), kMissing)};
    Regressor jump{regime_jump_name(spec.share, j), std::vector<double>(s.size(), kMissing)};
    for (std::size_t r = 0; r < s.size(); ++r) {
      if (is_missing(s[r])) continue;
      const bool above = s[r] > gamma;
      kink.values[r] = above ? s[r] - gamma : 0.0;
      jump.values[r] = above ? 1.0 : 0.0;
    }
    model.regressors.push_back(from_column(d, base));
    model.regressors.push_back(std::move(kink));
    if (spec.include_jumps) model.regressors.push_back(std::move(jump));
  }
}

FitResult fit_with_shrink(const PanelDataset& d, const PanelModel& model, const DistributedLagSpec& spec,
                          SampleShrink* shrink) {
  PanelModel contemporaneous = make_model(spec);
  contemporaneous.regressors.push_back(from_column(d, spec.share));
  const auto n0 = model_sample(d, contemporaneous).size();

  FitResult fit = fit_panel_model(d, model);
  if (fit.n_obs < n0) {
    fit.warnings.push_back("SampleShrinkWarning: " + std::to_string(n0) + " observations without leads/lags, " +
                           std::to_string(fit.n_obs) + " used");
  }
  if (shrink) *shrink = {n0, fit.n_obs};
  return fit;
}

}  // namespace

FitResult fit_distributed_lag(const PanelDataset& d, const DistributedLagSpec& spec, SampleShrink* shrink) {
  check_counts(spec);
  if (spec.regime_split) fail(Errc::InvalidArgument, "use fit_regime_distributed_lag for regime-specific models");
  const auto dl = build_lags_leads(d, spec.share, spec.n_leads, spec.n_lags);
  PanelModel model = make_model(spec);
  for (int k = spec.n_leads; k >= 1; --k) model.regressors.push_back(from_column(dl, lead_name(spec.share, k)));
  for (int j = 0; j <= spec.n_lags; ++j) model.regressors.push_back(from_column(dl, lag_name(spec.share, j)));
  return fit_with_shrink(dl, model, spec, shrink);
}

EventStudyPath to_event_study(const FitResult& dl, std::string_view share, int n_leads, int n_lags) {
  EventStudyPath path;
  path.kind = PathKind::Instantaneous;
  for (int h = -(n_leads + 1); h <= n_lags; ++h) {
    LinearCombination w;
    if (h >= 0) {
      for (int j = 0; j <= h; ++j) w.emplace_back(lag_name(share, j), 1.0);
    } else {
      for (int k = 1; k <= -h - 1; ++k) w.emplace_back(lead_name(share, k), -1.0);
    }
    path.horizons.push_back(h);
    if (w.empty()) {
      path.estimate.push_back(0.0);
      path.variance.push_back(0.0);
      continue;
    }
    const auto est = linear_combination(dl, w);
    path.estimate.push_back(est.estimate);
    path.variance.push_back(est.se * est.se);
  }
  return path;
}

FitResult fit_regime_distributed_lag(const PanelDataset& d, const DistributedLagSpec& spec, SampleShrink* shrink) {
  check_counts(spec);
  if (!spec.regime_split) fail(Errc::InvalidArgument, "regime model needs a regime split");
  const auto dl = build_lags_leads(d, spec.share, 0, spec.n_lags);
  PanelModel model = make_model(spec);
  add_regime_terms(dl, spec, model);
  return fit_with_shrink(dl, model, spec, shrink);
}

EventStudyPath cumulative_effects(const FitResult& rf, Regime regime, std::string_view share, int n_lags) {
  EventStudyPath path;
  path.kind = PathKind::Cumulative;
  path.horizons.push_back(-1);
  path.estimate.push_back(0.0);
  path.variance.push_back(0.0);
  LinearCombination w;
  for (int h = 0; h <= n_lags; ++h) {
    w.emplace_back(lag_name(share, h), 1.0);
    if (regime == Regime::Nonagrarian) w.emplace_back(regime_kink_name(share, h), 1.0);
    const auto est = linear_combination(rf, w);
    path.horizons.push_back(h);
    path.estimate.push_back(est.estimate);
    path.variance.push_back(est.se * est.se);
  }
  return path;
}

PretrendResult pretrend_test(const PanelDataset& d, const DistributedLagSpec& spec, int extra_leads) {
  check_counts(spec);
  if (extra_leads < 0) fail(Errc::InvalidArgument, "lead count must be non-negative");
  if (!spec.regime_split) fail(Errc::InvalidArgument, "pretrend test needs a regime split");
  const auto dl = build_lags_leads(d, spec.share, extra_leads, spec.n_lags);
  PanelModel model = make_model(spec);
  PretrendResult out;
  for (int k = extra_leads; k >= 1; --k) {
    model.regressors.push_back(from_column(dl, lead_name(spec.share, k)));
  }
  for (int k = 1; k <= extra_leads; ++k) out.names.push_back(lead_name(spec.share, k));
  add_regime_terms(dl, spec, model);
  out.fit = fit_panel_model(dl, model);
  for (const auto& n : out.names) out.leads.push_back(linear_combination(out.fit, {{n, 1.0}}));
  out.joint = wald_test_zero(out.fit, out.names);
  return out;
}

}  // namespace wvp
