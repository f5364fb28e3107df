#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wvp/panel.hpp"
#include "wvp/regression.hpp"

namespace wvp {

/// How nonagrarian taxable income converts to votes: the printed rule gives 2
/// votes per 0.10 krona, the prose rule 1 vote per 0.10 krona.
enum class VoteRule { Printed, Prose };

double votes_landowner(double assessed_value);
double votes_nonagrarian(double taxable_income, VoteRule rule = VoteRule::Printed);

/// Log-normal random walk for assessed agricultural property value.
struct LandProcess {
  double initial_log_mean = 13.4;
  double initial_log_sd = 0.8;
  double drift = 0.01;
  double shock_sd = 0.06;
};

/// Log-normal random walk for nonagrarian taxable income with occasional
/// upward jumps. The starting level is set through the log vote ratio
/// ln(V^N / V^L) under the printed rule.
struct IncomeProcess {
  double initial_log_ratio_mean = -1.4;
  double initial_log_ratio_sd = 1.1;
  double drift = 0.02;
  double shock_sd = 0.10;
  double jump_prob = 0.04;
  double jump_size = 0.5;
};

/// Direct effects of the vote controls on the outcome.
struct ControlsChannel {
  double votes_nonagr = 0.0;
  double inv_votes = 0.0;
  double log_pop = 0.0;
};

struct DgpConfig {
  int n_entities = 200;
  int n_years = 29;
  int first_year = 1881;

  double gamma = 0.5;
  // Element j is the effect of s_{t-j}. Nonagrarian entries are full slopes
  // above gamma; the slope change is their difference with the landowner entry.
  std::vector<double> landowner_effects{0.04};
  std::vector<double> nonagrarian_effects{0.41};
  double delta = 0.02;                // jump at gamma, contemporaneous only
  std::vector<double> lead_effects;   // element k-1 multiplies s_{t+k}

  double outcome_mean = 0.77;
  double entity_sd = 0.5;
  double year_sd = 0.1;
  double noise_sd = 0.3;
  double noise_ar = 0.0;  // AR(1) coefficient of the within-entity error

  LandProcess land;
  IncomeProcess income;
  double population_log_mean = 7.2;
  double population_log_sd = 0.8;
  double population_growth = 0.005;
  double population_shock_sd = 0.02;
  ControlsChannel controls;

  double missing_rate = 0.0;
  double high_conc_prob = 0.56;
  VoteRule vote_rule = VoteRule::Printed;
  bool round_votes = false;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigInvalid
  int max_lag() const { return static_cast<int>(landowner_effects.size()) - 1; }
  int max_lead() const { return static_cast<int>(lead_effects.size()); }
};

struct SimulatedPanel {
  PanelDataset data;  // canonical input columns
  DgpConfig truth;
};

/// Deterministic in cfg.seed: entity i draws from stream (seed, i) and the
/// year effects from a dedicated stream.
SimulatedPanel simulate_panel(const DgpConfig& cfg);

/// The model of `model` fitted with explicit entity and year indicator columns
/// (plus an intercept) by plain OLS, classical covariance. Guarded to 5,000 rows.
FitResult oracle_dummy_ols(const PanelDataset& d, const PanelModel& model);
inline constexpr std::size_t kOracleMaxRows = 5000;

// ---------------------------------------------------------------------------
// Monte Carlo

struct ReplicationResult {
  std::map<std::string, ParameterEstimate> estimates;
  std::map<std::string, double> p_values;
};

struct Estimator {
  std::string name;
  std::map<std::string, double> truth;
  std::function<ReplicationResult(const PanelDataset& prepared, std::uint64_t rep_seed)> run;
};

struct ParameterSummary {
  double truth = kMissing;
  double mean = kMissing;
  double bias = kMissing;
  double sd = kMissing;
  double mean_se = kMissing;
  double coverage = kMissing;  // share of reps with |est - truth| <= 1.96 se
  std::size_t n = 0;
};

struct MonteCarloReport {
  std::string estimator;
  int reps = 0;
  int failures = 0;
  double alpha = 0.05;
  std::map<std::string, ParameterSummary> parameters;
  std::map<std::string, double> rejection_rate;
  std::vector<ReplicationResult> replications;  // index = replication; empty on failure
  std::vector<std::string> failure_messages;
};

/// simulate -> derive_standard_variables -> estimate, for reps replications.
/// Replication r simulates with stream_seed(seed, r); failures are counted.
MonteCarloReport monte_carlo(const DgpConfig& cfg, const Estimator& estimator, int reps, std::uint64_t seed,
                             double alpha = 0.05);

struct EstimatorOptions {
  bool controls = true;
  bool include_jump = true;
  double trim = 0.10;
  int bootstrap = 99;
  int n_leads = 6;
  int n_lags = 6;
};

/// Named estimators: threshold, threshold-search, linearity, distributed-lag,
/// regime-dl, pretrend.
Estimator make_estimator(const std::string& kind, const DgpConfig& cfg, const EstimatorOptions& opts = {});

}  // namespace wvp
