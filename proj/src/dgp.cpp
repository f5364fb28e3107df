#include "wvp/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wvp/error.hpp"
#include "wvp/event_study.hpp"
#include "wvp/random.hpp"
#include "wvp/threshold.hpp"

namespace wvp {

double votes_landowner(double assessed_value) {
  if (!(assessed_value >= 0.0)) fail(Errc::NegativeValue, "assessed value must be non-negative");
  return 2.0 * (assessed_value * 0.03) / 10.0;
}

double votes_nonagrarian(double taxable_income, VoteRule rule) {
  if (!(taxable_income >= 0.0)) fail(Errc::NegativeValue, "taxable income must be non-negative");
  const double per_tenth = rule == VoteRule::Printed ? 2.0 : 1.0;
  return per_tenth * (taxable_income / 10.0);
}

void DgpConfig::validate() const {
  auto bad = [](const std::string& what) { fail(Errc::ConfigInvalid, what); };
  if (n_entities < 1 || n_years < 1) bad("n_entities and n_years must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) bad("gamma must lie in (0, 1)");
  if (landowner_effects.empty()) bad("landowner_effects needs at least the contemporaneous effect");
  if (landowner_effects.size() != nonagrarian_effects.size()) {
    bad("landowner_effects and nonagrarian_effects must have equal length");
  }
  if (entity_sd < 0 || year_sd < 0 || noise_sd < 0 || land.initial_log_sd < 0 || land.shock_sd < 0 ||
      income.initial_log_ratio_sd < 0 || income.shock_sd < 0 || population_log_sd < 0 || population_shock_sd < 0) {
    bad("standard deviations must be non-negative");
  }
  if (!(noise_ar > -1.0 && noise_ar < 1.0)) bad("noise_ar must lie in (-1, 1)");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) bad("missing_rate must lie in [0, 1)");
  if (!(income.jump_prob >= 0.0 && income.jump_prob <= 1.0)) bad("jump_prob must lie in [0, 1]");
  if (!(high_conc_prob >= 0.0 && high_conc_prob <= 1.0)) bad("high_conc_prob must lie in [0, 1]");
}

SimulatedPanel simulate_panel(const DgpConfig& cfg) {
  cfg.validate();
  const int burn = cfg.max_lag();
  const int tail = cfg.max_lead();
  const int T = cfg.n_years;
  const int span = burn + T + tail;  // simulated years, index 0 = first_year - burn

  std::vector<double> year_effect(static_cast<std::size_t>(T));
  {
    auto rng = make_stream(cfg.seed, std::numeric_limits<std::uint64_t>::max());
    std::normal_distribution<double> z;
    for (auto& v : year_effect) v = cfg.year_sd * z(rng);
  }

  const auto n = static_cast<std::size_t>(cfg.n_entities) * static_cast<std::size_t>(T);
  std::vector<std::string> entity(n);
  std::vector<int> year(n);
  std::map<std::string, std::vector<double>> vars;
  for (auto name : {columns::kSchoolSpend, columns::kPopulation, columns::kVotesNonagr, columns::kVotesLand,
                    columns::kDeflator, columns::kHighLandConc}) {
    vars[std::string(name)].resize(n);
  }
  auto& spend_out = vars[std::string(columns::kSchoolSpend)];
  auto& pop_out = vars[std::string(columns::kPopulation)];
  auto& vn_out = vars[std::string(columns::kVotesNonagr)];
  auto& vl_out = vars[std::string(columns::kVotesLand)];
  auto& defl_out = vars[std::string(columns::kDeflator)];
  auto& conc_out = vars[std::string(columns::kHighLandConc)];

  const double log_vote_gap = std::log(votes_landowner(1.0)) - std::log(votes_nonagrarian(1.0, VoteRule::Printed));
  const int L = cfg.max_lag();

#pragma omp parallel for schedule(static)
  for (int i = 0; i < cfg.n_entities; ++i) {
    auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;

    const double alpha = cfg.entity_sd * z(rng);
    const double conc = u(rng) < cfg.high_conc_prob ? 1.0 : 0.0;
    double log_land = cfg.land.initial_log_mean + cfg.land.initial_log_sd * z(rng);
    double log_income = log_land + log_vote_gap + cfg.income.initial_log_ratio_mean +
                        cfg.income.initial_log_ratio_sd * z(rng);
    double log_pop = cfg.population_log_mean + cfg.population_log_sd * z(rng);
    double err = cfg.noise_sd * z(rng);
    const double innov_sd = cfg.noise_sd * std::sqrt(1.0 - cfg.noise_ar * cfg.noise_ar);

    std::vector<double> share(static_cast<std::size_t>(span)), vn(share.size()), vl(share.size()),
        pop(share.size()), e(share.size());
    for (int t = 0; t < span; ++t) {
      if (t > 0) {
        log_land += cfg.land.drift + cfg.land.shock_sd * z(rng);
        log_income += cfg.income.drift + cfg.income.shock_sd * z(rng);
        if (u(rng) < cfg.income.jump_prob) log_income += cfg.income.jump_size;
        log_pop += cfg.population_growth + cfg.population_shock_sd * z(rng);
        err = cfg.noise_ar * err + innov_sd * z(rng);
      }
      double v_l = votes_landowner(std::exp(log_land));
      double v_n = votes_nonagrarian(std::exp(log_income), cfg.vote_rule);
      if (cfg.round_votes) {
        v_l = std::round(v_l);
        v_n = std::round(v_n);
      }
      const auto k = static_cast<std::size_t>(t);
      vl[k] = v_l;
      vn[k] = v_n;
      share[k] = v_l + v_n > 0.0 ? v_n / (v_l + v_n) : 0.0;
      pop[k] = std::exp(log_pop);
      e[k] = err;
    }

    for (int t = 0; t < T; ++t) {
      const auto k = static_cast<std::size_t>(t + burn);
      double y = cfg.outcome_mean + alpha + year_effect[static_cast<std::size_t>(t)];
      for (int j = 0; j <= L; ++j) {
        const double s = share[k - static_cast<std::size_t>(j)];
        const auto jj = static_cast<std::size_t>(j);
        y += cfg.landowner_effects[jj] * s;
        if (s > cfg.gamma) y += (cfg.nonagrarian_effects[jj] - cfg.landowner_effects[jj]) * (s - cfg.gamma);
      }
      if (share[k] > cfg.gamma) y += cfg.delta;
      for (std::size_t q = 0; q < cfg.lead_effects.size(); ++q) y += cfg.lead_effects[q] * share[k + q + 1];
      const double total = vn[k] + vl[k];
      y += cfg.controls.votes_nonagr * vn[k];
      if (total > 0.0) y += cfg.controls.inv_votes / total;
      y += cfg.controls.log_pop * std::log(pop[k]);
      y += e[k];

      const double deflator = std::exp(0.01 * t);
      const auto row = static_cast<std::size_t>(i) * static_cast<std::size_t>(T) + static_cast<std::size_t>(t);
      entity[row] = std::to_string(i + 1);
      year[row] = cfg.first_year + t;
      spend_out[row] = std::exp(y) * deflator * pop[k];
      pop_out[row] = pop[k];
      vn_out[row] = vn[k];
      vl_out[row] = vl[k];
      defl_out[row] = deflator;
      conc_out[row] = conc;
      if (cfg.missing_rate > 0.0) {
        if (u(rng) < cfg.missing_rate) spend_out[row] = kMissing;
        if (u(rng) < cfg.missing_rate) vn_out[row] = kMissing;
        if (u(rng) < cfg.missing_rate) vl_out[row] = kMissing;
      }
    }
  }

  SimulatedPanel out;
  out.data = PanelDataset::from_rows(entity, year, std::move(vars), "simulate_panel");
  out.truth = cfg;
  return out;
}

FitResult oracle_dummy_ols(const PanelDataset& d, const PanelModel& model) {
  const auto rows = model_sample(d, model);
  if (rows.empty()) fail(Errc::EmptySample, "no complete cases for the oracle");
  if (rows.size() > kOracleMaxRows) {
    fail(Errc::TooLargeForOracle, std::to_string(rows.size()) + " rows exceed the oracle limit");
  }
  const auto groups = make_groups(d, rows);

  DesignMatrix X;
  X.rows = rows;
  std::vector<std::span<const double>> cols;
  for (const auto& r : model.regressors) {
    X.names.push_back(r.name);
    cols.emplace_back(r.values);
  }
  for (const auto& c : model.controls) {
    X.names.push_back(c);
    cols.push_back(d.column(c));
  }
  const auto k = static_cast<Eigen::Index>(cols.size());
  const int ne = model.fe.entity_effects ? groups.n_entities : 0;
  const int nt = model.fe.time_effects ? groups.n_periods : 0;
  X.names.emplace_back("const");
  // Build indicator names from first appearance order of the codes.
  std::vector<std::string> entity_label(static_cast<std::size_t>(groups.n_entities));
  std::vector<int> period_label(static_cast<std::size_t>(groups.n_periods));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    entity_label[static_cast<std::size_t>(groups.entity[i])] = d.entity_ids()[d.entity_index()[rows[i]]];
    period_label[static_cast<std::size_t>(groups.period[i])] = d.years()[rows[i]];
  }
  for (int e = 1; e < ne; ++e) X.names.push_back("entity[" + entity_label[static_cast<std::size_t>(e)] + "]");
  for (int t = 1; t < nt; ++t) X.names.push_back("year[" + std::to_string(period_label[static_cast<std::size_t>(t)]) + "]");

  const auto n = static_cast<Eigen::Index>(rows.size());
  X.values = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(X.names.size()));
  Eigen::VectorXd y(n);
  const auto yc = d.column(model.outcome);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = rows[static_cast<std::size_t>(i)];
    y(i) = yc[r];
    for (Eigen::Index j = 0; j < k; ++j) X.values(i, j) = cols[static_cast<std::size_t>(j)][r];
    X.values(i, k) = 1.0;
    const int e = groups.entity[static_cast<std::size_t>(i)];
    const int t = groups.period[static_cast<std::size_t>(i)];
    if (ne > 0 && e > 0) X.values(i, k + e) = 1.0;
    if (nt > 0 && t > 0) X.values(i, k + std::max(ne - 1, 0) + t) = 1.0;
  }
  return ols_fit(X, y);
}

// ---------------------------------------------------------------------------

MonteCarloReport monte_carlo(const DgpConfig& cfg, const Estimator& estimator, int reps, std::uint64_t seed,
                             double alpha) {
  if (reps < 2) fail(Errc::InvalidArgument, "Monte Carlo needs at least two replications");
  cfg.validate();

  MonteCarloReport report;
  report.estimator = estimator.name;
  report.reps = reps;
  report.alpha = alpha;
  report.replications.resize(static_cast<std::size_t>(reps));
  std::vector<std::string> errors(static_cast<std::size_t>(reps));
  std::vector<char> ok(static_cast<std::size_t>(reps), 0);

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < reps; ++r) {
    const auto idx = static_cast<std::size_t>(r);
    try {
      DgpConfig c = cfg;
      c.seed = stream_seed(seed, idx);
      const auto sim = simulate_panel(c);
      const auto prepared = derive_standard_variables(sim.data).data;
      report.replications[idx] = estimator.run(prepared, stream_seed(c.seed, 0x5EEDULL));
      ok[idx] = 1;
    } catch (const std::exception& ex) {
      errors[idx] = "replication " + std::to_string(r) + ": " + ex.what();
    }
  }

  for (int r = 0; r < reps; ++r) {
    if (!ok[static_cast<std::size_t>(r)]) {
      ++report.failures;
      report.failure_messages.push_back(errors[static_cast<std::size_t>(r)]);
      report.replications[static_cast<std::size_t>(r)] = {};
    }
  }

  std::map<std::string, std::vector<ParameterEstimate>> by_param;
  std::map<std::string, std::vector<double>> by_test;
  for (int r = 0; r < reps; ++r) {
    if (!ok[static_cast<std::size_t>(r)]) continue;
    const auto& rep = report.replications[static_cast<std::size_t>(r)];
    for (const auto& [name, est] : rep.estimates) by_param[name].push_back(est);
    for (const auto& [name, p] : rep.p_values) by_test[name].push_back(p);
  }
  for (const auto& [name, ests] : by_param) {
    ParameterSummary s;
    auto t = estimator.truth.find(name);
    s.truth = t != estimator.truth.end() ? t->second : kMissing;
    std::vector<double> v;
    double se_sum = 0.0;
    std::size_t se_n = 0, covered = 0;
    for (const auto& e : ests) {
      if (is_missing(e.estimate)) continue;
      v.push_back(e.estimate);
      if (!is_missing(e.se)) {
        se_sum += e.se;
        ++se_n;
        if (!is_missing(s.truth) && std::abs(e.estimate - s.truth) <= 1.96 * e.se) ++covered;
      }
    }
    s.n = v.size();
    if (!v.empty()) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      s.mean = m;
      s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : kMissing;
      if (!is_missing(s.truth)) s.bias = m - s.truth;
    }
    if (se_n > 0) {
      s.mean_se = se_sum / static_cast<double>(se_n);
      if (!is_missing(s.truth)) s.coverage = static_cast<double>(covered) / static_cast<double>(se_n);
    }
    report.parameters[name] = s;
  }
  for (const auto& [name, ps] : by_test) {
    std::size_t reject = 0, valid = 0;
    for (double p : ps) {
      if (is_missing(p)) continue;
      ++valid;
      if (p < alpha) ++reject;
    }
    report.rejection_rate[name] = valid ? static_cast<double>(reject) / static_cast<double>(valid) : kMissing;
  }
  return report;
}

Estimator make_estimator(const std::string& kind, const DgpConfig& cfg, const EstimatorOptions& opts) {
  Estimator est;
  est.name = kind;
  const auto controls = opts.controls ? default_controls() : std::vector<std::string>{};
  const double gamma = cfg.gamma;

  if (kind == "threshold") {
    est.truth = {{"beta_L", cfg.landowner_effects[0]}, {"beta_N", cfg.nonagrarian_effects[0]}};
    if (opts.include_jump) est.truth["delta"] = cfg.delta;
    est.run = [=](const PanelDataset& d, std::uint64_t) {
      ThresholdSpec spec;
      spec.gamma = gamma;
      spec.include_jump = opts.include_jump;
      spec.controls = controls;
      const auto tf = fit_threshold(d, spec);
      ReplicationResult r;
      r.estimates["beta_L"] = tf.beta_L;
      r.estimates["beta_N"] = tf.beta_N;
      if (opts.include_jump) {
        r.estimates["delta"] = tf.delta;
        r.p_values["regime_difference"] = regime_difference_test(tf).p_value;
      }
      return r;
    };
  } else if (kind == "threshold-search") {
    est.truth = {{"gamma", gamma}};
    est.run = [=](const PanelDataset& d, std::uint64_t) {
      ThresholdSpec spec;
      spec.include_jump = opts.include_jump;
      spec.controls = controls;
      const auto search = estimate_threshold(d, spec, opts.trim);
      const auto ci = threshold_confidence_interval(search.profile, search.n_obs);
      ReplicationResult r;
      r.estimates["gamma"] = {search.gamma, kMissing};
      r.estimates["gamma_ci_lower"] = {ci.lower, kMissing};
      r.estimates["gamma_ci_upper"] = {ci.upper, kMissing};
      return r;
    };
  } else if (kind == "linearity") {
    est.run = [=](const PanelDataset& d, std::uint64_t seed) {
      ThresholdSpec spec;
      spec.include_jump = opts.include_jump;
      spec.controls = controls;
      const auto t = bootstrap_linearity_test(d, spec, opts.trim, opts.bootstrap, seed);
      ReplicationResult r;
      r.estimates["sup_f"] = {t.sup_f, kMissing};
      r.p_values["linearity"] = t.p_value;
      return r;
    };
  } else if (kind == "distributed-lag") {
    for (int j = 0; j <= opts.n_lags; ++j) {
      const double v = j < static_cast<int>(cfg.landowner_effects.size()) ? cfg.landowner_effects[static_cast<std::size_t>(j)] : 0.0;
      est.truth[lag_name(columns::kShare, j)] = v;
    }
    est.run = [=](const PanelDataset& d, std::uint64_t) {
      DistributedLagSpec spec;
      spec.n_leads = opts.n_leads;
      spec.n_lags = opts.n_lags;
      spec.controls = controls;
      const auto fit = fit_distributed_lag(d, spec);
      ReplicationResult r;
      std::vector<std::string> names;
      for (int k = 1; k <= opts.n_leads; ++k) names.push_back(lead_name(spec.share, k));
      for (int j = 0; j <= opts.n_lags; ++j) names.push_back(lag_name(spec.share, j));
      for (const auto& n : names) r.estimates[n] = linear_combination(fit, {{n, 1.0}});
      r.p_values["joint_all"] = wald_test_zero(fit, names).p_value;
      return r;
    };
  } else if (kind == "regime-dl") {
    double land = 0.0, non = 0.0;
    for (int h = 0; h <= opts.n_lags; ++h) {
      const auto hh = static_cast<std::size_t>(h);
      if (hh < cfg.landowner_effects.size()) {
        land += cfg.landowner_effects[hh];
        non += cfg.nonagrarian_effects[hh];
      }
      est.truth["cum_landowner_h" + std::to_string(h)] = land;
      est.truth["cum_nonagrarian_h" + std::to_string(h)] = non;
    }
    est.run = [=](const PanelDataset& d, std::uint64_t) {
      DistributedLagSpec spec;
      spec.n_leads = 0;
      spec.n_lags = opts.n_lags;
      spec.regime_split = gamma;
      spec.controls = controls;
      const auto fit = fit_regime_distributed_lag(d, spec);
      ReplicationResult r;
      for (auto regime : {Regime::Landowner, Regime::Nonagrarian}) {
        const auto path = cumulative_effects(fit, regime, spec.share, opts.n_lags);
        const std::string prefix = regime == Regime::Landowner ? "cum_landowner_h" : "cum_nonagrarian_h";
        for (std::size_t i = 0; i < path.horizons.size(); ++i) {
          if (path.horizons[i] < 0) continue;
          r.estimates[prefix + std::to_string(path.horizons[i])] = {path.estimate[i], path.se(i)};
        }
      }
      return r;
    };
  } else if (kind == "pretrend") {
    for (int k = 1; k <= opts.n_leads; ++k) {
      const auto kk = static_cast<std::size_t>(k - 1);
      est.truth[lead_name(columns::kShare, k)] = kk < cfg.lead_effects.size() ? cfg.lead_effects[kk] : 0.0;
    }
    est.run = [=](const PanelDataset& d, std::uint64_t) {
      DistributedLagSpec spec;
      spec.n_lags = opts.n_lags;
      spec.regime_split = gamma;
      spec.controls = controls;
      const auto pt = pretrend_test(d, spec, opts.n_leads);
      ReplicationResult r;
      for (std::size_t k = 0; k < pt.names.size(); ++k) r.estimates[pt.names[k]] = pt.leads[k];
      r.p_values["pretrend"] = pt.joint.p_value;
      return r;
    };
  } else {
    fail(Errc::InvalidArgument, "unknown estimator '" + kind + "'");
  }
  return est;
}

}  // namespace wvp
