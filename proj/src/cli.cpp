#include "wvp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "wvp/binscatter.hpp"
#include "wvp/csv.hpp"
#include "wvp/error.hpp"
#include "wvp/event_study.hpp"
#include "wvp/kernels.hpp"
#include "wvp/report.hpp"
#include "wvp/threshold.hpp"

#ifndef WVP_VERSION
#define WVP_VERSION "unknown"
#endif

namespace wvp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// DGP configuration <-> JSON

namespace {

template <class T>
void read_field(const json& j, const char* key, T& field, std::set<std::string>& seen) {
  seen.insert(key);
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::ConfigInvalid, std::string("field '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& seen, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!seen.count(key)) fail(Errc::ConfigInvalid, "unknown key '" + key + "' in " + where);
  }
}

json land_json(const LandProcess& p) {
  return {{"initial_log_mean", p.initial_log_mean}, {"initial_log_sd", p.initial_log_sd}, {"drift", p.drift},
          {"shock_sd", p.shock_sd}};
}

json income_json(const IncomeProcess& p) {
  return {{"initial_log_ratio_mean", p.initial_log_ratio_mean},
          {"initial_log_ratio_sd", p.initial_log_ratio_sd},
          {"drift", p.drift},
          {"shock_sd", p.shock_sd},
          {"jump_prob", p.jump_prob},
          {"jump_size", p.jump_size}};
}

}  // namespace

json dgp_to_json(const DgpConfig& c) {
  return {{"n_entities", c.n_entities},
          {"n_years", c.n_years},
          {"first_year", c.first_year},
          {"gamma", c.gamma},
          {"landowner_effects", c.landowner_effects},
          {"nonagrarian_effects", c.nonagrarian_effects},
          {"delta", c.delta},
          {"lead_effects", c.lead_effects},
          {"outcome_mean", c.outcome_mean},
          {"entity_sd", c.entity_sd},
          {"year_sd", c.year_sd},
          {"noise_sd", c.noise_sd},
          {"noise_ar", c.noise_ar},
          {"land", land_json(c.land)},
          {"income", income_json(c.income)},
          {"population_log_mean", c.population_log_mean},
          {"population_log_sd", c.population_log_sd},
          {"population_growth", c.population_growth},
          {"population_shock_sd", c.population_shock_sd},
          {"controls",
           {{"votes_nonagr", c.controls.votes_nonagr},
            {"inv_votes", c.controls.inv_votes},
            {"log_pop", c.controls.log_pop}}},
          {"missing_rate", c.missing_rate},
          {"high_conc_prob", c.high_conc_prob},
          {"vote_rule", c.vote_rule == VoteRule::Printed ? "printed" : "prose"},
          {"round_votes", c.round_votes},
          {"seed", c.seed}};
}

DgpConfig dgp_from_json(const json& j) {
  if (!j.is_object()) fail(Errc::ConfigInvalid, "DGP config must be a JSON object");
  DgpConfig c;
  std::set<std::string> seen;
  read_field(j, "n_entities", c.n_entities, seen);
  read_field(j, "n_years", c.n_years, seen);
  read_field(j, "first_year", c.first_year, seen);
  read_field(j, "gamma", c.gamma, seen);
  read_field(j, "landowner_effects", c.landowner_effects, seen);
  read_field(j, "nonagrarian_effects", c.nonagrarian_effects, seen);
  read_field(j, "delta", c.delta, seen);
  read_field(j, "lead_effects", c.lead_effects, seen);
  read_field(j, "outcome_mean", c.outcome_mean, seen);
  read_field(j, "entity_sd", c.entity_sd, seen);
  read_field(j, "year_sd", c.year_sd, seen);
  read_field(j, "noise_sd", c.noise_sd, seen);
  read_field(j, "noise_ar", c.noise_ar, seen);
  read_field(j, "population_log_mean", c.population_log_mean, seen);
  read_field(j, "population_log_sd", c.population_log_sd, seen);
  read_field(j, "population_growth", c.population_growth, seen);
  read_field(j, "population_shock_sd", c.population_shock_sd, seen);
  read_field(j, "missing_rate", c.missing_rate, seen);
  read_field(j, "high_conc_prob", c.high_conc_prob, seen);
  read_field(j, "round_votes", c.round_votes, seen);
  read_field(j, "seed", c.seed, seen);

  // scalar shorthands for the contemporaneous effects
  double beta_l = kMissing, beta_n = kMissing;
  read_field(j, "beta_L", beta_l, seen);
  read_field(j, "beta_N", beta_n, seen);
  if (!is_missing(beta_l)) c.landowner_effects.at(0) = beta_l;
  if (!is_missing(beta_n)) c.nonagrarian_effects.at(0) = beta_n;

  seen.insert("vote_rule");
  if (j.contains("vote_rule")) {
    const auto rule = j.at("vote_rule").get<std::string>();
    if (rule == "printed") {
      c.vote_rule = VoteRule::Printed;
    } else if (rule == "prose") {
      c.vote_rule = VoteRule::Prose;
    } else {
      fail(Errc::ConfigInvalid, "vote_rule must be 'printed' or 'prose'");
    }
  }
  seen.insert("land");
  if (j.contains("land")) {
    const auto& l = j.at("land");
    std::set<std::string> s;
    read_field(l, "initial_log_mean", c.land.initial_log_mean, s);
    read_field(l, "initial_log_sd", c.land.initial_log_sd, s);
    read_field(l, "drift", c.land.drift, s);
    read_field(l, "shock_sd", c.land.shock_sd, s);
    reject_unknown(l, s, "land");
  }
  seen.insert("income");
  if (j.contains("income")) {
    const auto& l = j.at("income");
    std::set<std::string> s;
    read_field(l, "initial_log_ratio_mean", c.income.initial_log_ratio_mean, s);
    read_field(l, "initial_log_ratio_sd", c.income.initial_log_ratio_sd, s);
    read_field(l, "drift", c.income.drift, s);
    read_field(l, "shock_sd", c.income.shock_sd, s);
    read_field(l, "jump_prob", c.income.jump_prob, s);
    read_field(l, "jump_size", c.income.jump_size, s);
    reject_unknown(l, s, "income");
  }
  seen.insert("controls");
  if (j.contains("controls")) {
    const auto& l = j.at("controls");
    std::set<std::string> s;
    read_field(l, "votes_nonagr", c.controls.votes_nonagr, s);
    read_field(l, "inv_votes", c.controls.inv_votes, s);
    read_field(l, "log_pop", c.controls.log_pop, s);
    reject_unknown(l, s, "controls");
  }
  reject_unknown(j, seen, "DGP config");
  c.validate();
  return c;
}

PanelDataset split_sample(const PanelDataset& d, const std::string& indicator, double value) {
  if (!d.has(indicator)) fail(Errc::UnknownVariable, "filter column '" + indicator + "' not in dataset");
  if (value != 0.0 && value != 1.0) fail(Errc::InvalidArgument, "filter value must be 0 or 1");
  const auto c = d.column(indicator);
  std::vector<bool> keep(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!is_missing(c[i]) && c[i] != 0.0 && c[i] != 1.0) {
      fail(Errc::NonBinaryIndicator, "column '" + indicator + "' has a value other than 0/1");
    }
    keep[i] = c[i] == value;
  }
  return d.filter_rows(keep);
}

// ---------------------------------------------------------------------------

namespace {

// Outputs are buffered and only written once the whole run succeeded.
class Artifacts {
 public:
  void add(const fs::path& path, std::string content) { files_.emplace_back(path, std::move(content)); }

  void commit() const {
    std::vector<fs::path> temps;
    auto cleanup = [&] {
      std::error_code ec;
      for (const auto& t : temps) fs::remove(t, ec);
    };
    for (const auto& [path, content] : files_) {
      std::error_code ec;
      if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
      if (ec) {
        cleanup();
        fail(Errc::Io, "cannot create directory " + path.parent_path().string());
      }
      fs::path tmp = path;
      tmp += ".partial";
      std::ofstream f(tmp, std::ios::binary);
      f << content;
      f.close();
      temps.push_back(tmp);
      if (!f) {
        cleanup();
        fail(Errc::Io, "cannot write " + path.string());
      }
    }
    for (std::size_t i = 0; i < files_.size(); ++i) {
      std::error_code ec;
      fs::rename(temps[i], files_[i].first, ec);
      if (ec) {
        cleanup();
        fail(Errc::Io, "cannot write " + files_[i].first.string());
      }
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::Io, "cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    fail(Errc::ConfigInvalid, path + ": " + e.what());
  }
}

struct Common {
  std::string input;
  std::string schema;
  std::string out = "out";
  std::string filter;
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

struct LoadedPanel {
  PanelDataset data;
  std::size_t input_rows = 0;
  std::size_t dropped_by_filter = 0;
  std::size_t non_positive = 0;
  json filter = nullptr;
};

Schema read_schema(const std::string& path) {
  Schema s;
  if (path.empty()) return s;
  const auto j = read_json_file(path);
  std::set<std::string> seen;
  read_field(j, "entity", s.entity, seen);
  read_field(j, "year", s.year, seen);
  read_field(j, "variables", s.variables, seen);
  reject_unknown(j, seen, "schema");
  return s;
}

LoadedPanel load(const Common& c) {
  if (c.input.empty()) fail(Errc::InvalidArgument, "--input is required");
  LoadedPanel lp;
  auto raw = load_panel_file(c.input, read_schema(c.schema));
  lp.input_rows = raw.n_rows();
  using namespace columns;
  if (raw.has(kSchoolSpend) && raw.has(kPopulation) && raw.has(kVotesNonagr) && raw.has(kVotesLand)) {
    auto sv = derive_standard_variables(raw);
    raw = std::move(sv.data);
    lp.non_positive = sv.non_positive;
  }
  if (!c.filter.empty()) {
    const auto eq = c.filter.find('=');
    if (eq == std::string::npos) fail(Errc::InvalidArgument, "--filter expects column=value");
    const auto col = c.filter.substr(0, eq);
    const auto val_text = c.filter.substr(eq + 1);
    bool missing = false;
    const auto val = csv::parse_number(val_text, &missing);
    if (!val || missing) fail(Errc::InvalidArgument, "--filter value must be numeric");
    auto filtered = split_sample(raw, col, *val);
    lp.dropped_by_filter = raw.n_rows() - filtered.n_rows();
    lp.filter = {{"column", col}, {"value", *val}, {"entities_kept", filtered.n_entities()}};
    raw = std::move(filtered);
  }
  lp.data = std::move(raw);
  return lp;
}

std::size_t distinct_entities(const PanelDataset& d, const std::vector<std::size_t>& rows) {
  std::set<std::size_t> s;
  for (auto r : rows) s.insert(d.entity_index()[r]);
  return s.size();
}

json sample_meta(const LoadedPanel& lp, std::size_t used, std::size_t entities_used) {
  const std::size_t after_filter = lp.input_rows - lp.dropped_by_filter;
  return {{"input_rows", lp.input_rows},
          {"dropped_by_filter", lp.dropped_by_filter},
          {"dropped_by_missingness", after_filter - used},
          {"used_rows", used},
          {"entities_used", entities_used},
          {"non_positive_outcome_cells", lp.non_positive},
          {"filter", lp.filter}};
}

json run_meta(const std::string& command, const json& config, const Common& c, json sample, json notes) {
  return {{"software", {{"name", "wvpanel"}, {"version", WVP_VERSION}}},
          {"command", command},
          {"config", config},
          {"input", c.input.empty() ? json(nullptr) : json(c.input)},
          {"seed", c.seed ? json(*c.seed) : json(nullptr)},
          {"sample", std::move(sample)},
          {"notes", std::move(notes)}};
}

std::uint64_t require_seed(const Common& c, const std::string& what) {
  if (!c.seed) fail(Errc::InvalidArgument, what + " is stochastic: --seed is required");
  return *c.seed;
}

std::vector<std::string> controls_or_none(bool on) { return on ? default_controls() : std::vector<std::string>{}; }

FixedEffectsSpec fe_from(bool no_fe) {
  FixedEffectsSpec fe;
  if (no_fe) fe.entity_effects = fe.time_effects = false;
  return fe;
}

// Turns a config object into command-line tokens placed before the user's
// own arguments, so explicit flags win (options keep their last value).
std::vector<std::string> config_tokens(const json& j) {
  std::vector<std::string> out;
  for (const auto& [key, value] : j.items()) {
    if (key == "dgp") continue;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_string()) {
      out.push_back(flag);
      out.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      for (const auto& v : value) {
        out.push_back(flag);
        out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
    } else if (value.is_null()) {
      continue;
    } else {
      out.push_back(flag);
      out.push_back(value.dump());
    }
  }
  return out;
}

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Usage: return kExitUsage;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
  }
  return 1;
}

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Usage: return "UsageError";
    case ErrorCategory::Data: return "DataError";
    case ErrorCategory::Numerical: return "NumericalError";
  }
  return "Error";
}

void report_error(std::ostream& err, const std::string& category, const std::string& code, const std::string& msg) {
  err << json{{"error", {{"category", category}, {"code", code}, {"message", msg}}}}.dump() << "\n";
}

void add_common(CLI::App* sub, Common& c, bool needs_input) {
  if (needs_input) {
    sub->add_option("--input,-i", c.input, "Panel CSV")->required();
    sub->add_option("--schema", c.schema, "JSON column map {entity, year, variables}");
    sub->add_option("--filter", c.filter, "Sample filter column=value (0/1 indicator)");
  }
  sub->add_option("--out,-o", c.out, "Output directory");
  sub->add_option("--config", c.config, "JSON file supplying any flag");
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--threads", c.threads, "Worker threads (results do not depend on it)")->check(CLI::NonNegativeNumber);
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = args_in;
  json file_config = json::object();

  try {
    if (auto path = find_config_path(args)) {
      file_config = read_json_file(*path);
      if (!file_config.is_object()) fail(Errc::ConfigInvalid, "config must be a JSON object");
      if (args.size() >= 2) {
        auto tokens = config_tokens(file_config);
        args.insert(args.begin() + 2, tokens.begin(), tokens.end());
      }
    }
  } catch (const Error& e) {
    report_error(err, category_name(category(e.code())), std::string(to_string(e.code())), e.what());
    return exit_code(category(e.code()));
  }

  CLI::App app{"Panel econometrics for weighted-voting data", "wvpanel"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(WVP_VERSION));

  Common common;

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a synthetic panel");
  int sim_entities = 0, sim_years = 0;
  add_common(sim, common, false);
  sim->get_option("--out")->description("Output CSV path")->required();
  sim->add_option("--entities", sim_entities, "Override n_entities");
  sim->add_option("--years", sim_years, "Override n_years");

  // threshold
  auto* thr = app.add_subcommand("threshold", "Threshold regression");
  add_common(thr, common, true);
  double gamma = 0.5, trim = kDefaultTrim, step = kDefaultGridStep, alpha = 0.05;
  bool estimate = false, no_jump = false, no_controls = false, no_fe = false;
  int bootstrap = 0;
  std::string cluster_var;
  thr->add_option("--gamma", gamma, "Threshold point");
  thr->add_flag("--estimate", estimate, "Estimate the threshold on a trimmed grid");
  thr->add_option("--trim", trim, "Trimming fraction");
  thr->add_option("--grid-step", step, "Quantile step of the candidate grid");
  thr->add_flag("--no-jump", no_jump, "Drop the level jump at the threshold");
  thr->add_option("--bootstrap", bootstrap, "Bootstrap replications for the linearity test (0 = off)");
  thr->add_option("--alpha", alpha, "Level of the threshold confidence interval");
  thr->add_flag("--no-controls", no_controls, "Omit V^N, 1/V and log population");
  thr->add_flag("--no-fe", no_fe, "No entity or year effects");
  thr->add_option("--cluster", cluster_var, "Cluster variable (default: entity)");

  // event-study
  auto* es = app.add_subcommand("event-study", "Distributed-lag event study");
  add_common(es, common, true);
  int leads = 6, lags = 6, pretrend_leads = -1;
  std::optional<double> regime;
  bool es_controls = false, pretrend = false, jumps = false, es_no_fe = false;
  es->add_option("--leads", leads, "Number of leads")->check(CLI::NonNegativeNumber);
  es->add_option("--lags", lags, "Number of lags")->check(CLI::NonNegativeNumber);
  es->add_option("--regime", regime, "Regime split point; fits the regime-specific model");
  es->add_flag("--controls", es_controls, "Add V^N, 1/V and log population");
  es->add_flag("--jumps", jumps, "Regime model: add a level jump per lag");
  es->add_flag("--pretrend", pretrend, "Regime model augmented with leads; joint test");
  es->add_option("--pretrend-leads", pretrend_leads, "Leads in the pretrend model (default: --leads)");
  es->add_flag("--no-fe", es_no_fe, "No entity or year effects");
  es->add_option("--cluster", cluster_var, "Cluster variable (default: entity)");

  // binscatter
  auto* bs = app.add_subcommand("binscatter", "Covariate-adjusted binned scatter");
  add_common(bs, common, true);
  int bins = 100;
  double split = 0.5;
  std::string y_var(columns::kOutcome), x_var(columns::kShare);
  bool bs_no_controls = false, bs_no_fe = false, svg = false;
  bs->add_option("--bins", bins, "Number of equal-count bins");
  bs->add_option("--split", split, "Split point for the two lines");
  bs->add_option("--y", y_var, "Outcome column");
  bs->add_option("--x", x_var, "Running variable column");
  bs->add_flag("--no-controls", bs_no_controls, "Do not adjust for V^N, 1/V and log population");
  bs->add_flag("--no-fe", bs_no_fe, "Do not adjust for entity and year effects");
  bs->add_flag("--svg", svg, "Also write binscatter.svg");

  // montecarlo
  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo study of an estimator on the simulator");
  add_common(mc, common, false);
  std::string estimator = "threshold";
  int reps = 100;
  EstimatorOptions eopts;
  bool mc_no_controls = false, mc_no_jump = false;
  mc->add_option("--estimator", estimator, "threshold | threshold-search | linearity | distributed-lag | regime-dl | pretrend");
  mc->add_option("--reps", reps, "Replications");
  mc->add_option("--bootstrap", eopts.bootstrap, "Bootstrap replications (linearity)");
  mc->add_option("--trim", eopts.trim, "Trimming fraction");
  mc->add_option("--leads", eopts.n_leads, "Leads");
  mc->add_option("--lags", eopts.n_lags, "Lags");
  mc->add_flag("--no-controls", mc_no_controls, "Estimate without controls");
  mc->add_flag("--no-jump", mc_no_jump, "Threshold fits without the jump");

  // summary
  auto* sm = app.add_subcommand("summary", "Summary statistics by variable");
  add_common(sm, common, true);

  try {
    std::vector<std::string> rest(args.begin() + 1, args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << WVP_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "UsageError", e.get_name(), e.what());
    return kExitUsage;
  }

  try {
    kernels::set_threads(common.threads);
    Artifacts artifacts;
    const fs::path dir(common.out);

    if (sim->parsed()) {
      DgpConfig cfg = file_config.contains("dgp") ? dgp_from_json(file_config.at("dgp")) : DgpConfig{};
      cfg.seed = require_seed(common, "simulate");
      if (sim_entities > 0) cfg.n_entities = sim_entities;
      if (sim_years > 0) cfg.n_years = sim_years;
      const auto sim_result = simulate_panel(cfg);
      std::vector<std::string> vars;
      for (auto name : {columns::kSchoolSpend, columns::kPopulation, columns::kVotesNonagr, columns::kVotesLand,
                        columns::kDeflator, columns::kHighLandConc}) {
        vars.emplace_back(name);
      }
      std::ostringstream csv_out;
      write_panel(csv_out, sim_result.data, vars);
      const fs::path csv_path(common.out);
      artifacts.add(csv_path, csv_out.str());
      json sample = {{"entities", sim_result.data.n_entities()}, {"rows", sim_result.data.n_rows()}};
      artifacts.add(csv_path.parent_path() / "run_meta.json",
                    dump(run_meta("simulate", {{"dgp", dgp_to_json(cfg)}, {"out", csv_path.string()}}, common,
                                  sample,
                                  json::array({"nonagrarian_effects are full slopes above gamma",
                                               "vote_rule 'printed' uses 2 votes per 0.10 krona"}))));
    } else if (thr->parsed()) {
      const auto lp = load(common);
      ThresholdSpec spec;
      spec.include_jump = !no_jump;
      spec.controls = controls_or_none(!no_controls);
      spec.fe = fe_from(no_fe);
      spec.cluster_var = cluster_var;
      json result;
      json notes = json::array();
      std::optional<ThresholdSearch> search;
      if (estimate) {
        search = estimate_threshold(lp.data, spec, trim, step);
        spec.gamma = search->gamma;
        const auto ci = threshold_confidence_interval(search->profile, search->n_obs, alpha);
        result["threshold_search"] = {{"gamma_hat", search->gamma},
                                      {"trim", trim},
                                      {"grid_step", step},
                                      {"candidates", search->profile.size()},
                                      {"confidence_interval", report::to_json(ci)},
                                      {"alpha", alpha}};
        std::ostringstream prof;
        report::write_profile_csv(prof, search->profile);
        artifacts.add(dir / "profile.csv", prof.str());
        notes.push_back("trim and grid step are defaults chosen by convention, not estimated");
      } else {
        spec.gamma = gamma;
      }
      const auto tf = fit_threshold(lp.data, spec);
      result["table"] = report::threshold_table(tf);
      result["fit"] = report::to_json(tf.fit, true);
      if (spec.include_jump) result["regime_difference_test"] = report::to_json(regime_difference_test(tf));
      if (bootstrap > 0) {
        const auto seed = require_seed(common, "--bootstrap");
        result["linearity_test"] = report::to_json(bootstrap_linearity_test(lp.data, spec, trim, bootstrap, seed, step));
      }
      artifacts.add(dir / "threshold.json", dump(result));
      json cfg = {{"gamma", gamma},         {"estimate", estimate},        {"trim", trim},
                  {"grid_step", step},      {"jump", !no_jump},            {"bootstrap", bootstrap},
                  {"alpha", alpha},         {"controls", spec.controls},   {"fixed_effects", !no_fe},
                  {"cluster", cluster_var.empty() ? "entity" : cluster_var}, {"filter", common.filter}};
      artifacts.add(dir / "run_meta.json",
                    dump(run_meta("threshold", cfg, common,
                                  sample_meta(lp, tf.fit.n_obs, distinct_entities(lp.data, tf.fit.rows)), notes)));
    } else if (es->parsed()) {
      const auto lp = load(common);
      DistributedLagSpec spec;
      spec.n_leads = leads;
      spec.n_lags = lags;
      spec.regime_split = regime;
      spec.include_jumps = jumps;
      spec.controls = controls_or_none(es_controls);
      spec.fe = fe_from(es_no_fe);
      spec.cluster_var = cluster_var;
      json result;
      json notes = json::array({"paths are normalized to zero at horizon -1"});
      FitResult fit;
      if (pretrend && !regime) fail(Errc::InvalidArgument, "--pretrend needs --regime");
      if (!regime) {
        fit = fit_distributed_lag(lp.data, spec);
        const auto path = to_event_study(fit, spec.share, leads, lags);
        std::ostringstream p;
        report::write_path_csv(p, path);
        artifacts.add(dir / "path.csv", p.str());
        artifacts.add(dir / "path.svg", report::path_svg(path, "Event study"));
      } else {
        spec.n_leads = 0;
        fit = fit_regime_distributed_lag(lp.data, spec);
        notes.push_back("regime model uses one (lag, slope-change) pair per lag 0..n_lags");
        for (auto r : {Regime::Landowner, Regime::Nonagrarian}) {
          const auto path = cumulative_effects(fit, r, spec.share, lags);
          const std::string tag = r == Regime::Landowner ? "landowner" : "nonagrarian";
          std::ostringstream p;
          report::write_path_csv(p, path);
          artifacts.add(dir / ("path_" + tag + ".csv"), p.str());
          artifacts.add(dir / ("path_" + tag + ".svg"),
                        report::path_svg(path, "Cumulative effect, " + tag + " regime"));
        }
        if (pretrend) {
          const auto pt = pretrend_test(lp.data, spec, pretrend_leads >= 0 ? pretrend_leads : leads);
          json leads_json = json::array();
          for (std::size_t k = 0; k < pt.names.size(); ++k) {
            leads_json.push_back({{"name", pt.names[k]}, {"estimate", pt.leads[k].estimate}, {"se", pt.leads[k].se}});
          }
          artifacts.add(dir / "pretrend.json",
                        dump({{"leads", leads_json}, {"joint", report::to_json(pt.joint)},
                              {"fit", report::to_json(pt.fit)}}));
        }
      }
      result["fit"] = report::to_json(fit, true);
      artifacts.add(dir / "event_study.json", dump(result));
      json cfg = {{"leads", leads},
                  {"lags", lags},
                  {"regime", regime ? json(*regime) : json(nullptr)},
                  {"controls", spec.controls},
                  {"jumps", jumps},
                  {"pretrend", pretrend},
                  {"pretrend_leads", pretrend_leads >= 0 ? pretrend_leads : leads},
                  {"fixed_effects", !es_no_fe},
                  {"cluster", cluster_var.empty() ? "entity" : cluster_var},
                  {"filter", common.filter}};
      artifacts.add(dir / "run_meta.json",
                    dump(run_meta("event-study", cfg, common,
                                  sample_meta(lp, fit.n_obs, distinct_entities(lp.data, fit.rows)), notes)));
    } else if (bs->parsed()) {
      const auto lp = load(common);
      const auto controls = controls_or_none(!bs_no_controls);
      const auto fe = fe_from(bs_no_fe);
      const auto b = binscatter(lp.data, y_var, x_var, controls, fe, bins, split);
      std::ostringstream p;
      report::write_bins_csv(p, b);
      artifacts.add(dir / "bins.csv", p.str());
      artifacts.add(dir / "lines.json", dump(report::binscatter_lines(b)));
      if (svg) artifacts.add(dir / "binscatter.svg", report::binscatter_svg(b, "Binned scatter", x_var, y_var));
      std::vector<std::string> used_cols{y_var, x_var};
      used_cols.insert(used_cols.end(), controls.begin(), controls.end());
      std::vector<std::span<const double>> spans;
      for (const auto& col : used_cols) spans.push_back(lp.data.column(col));
      const auto rows = complete_cases(spans, lp.data.n_rows());
      json cfg = {{"bins", bins}, {"split", split}, {"y", y_var}, {"x", x_var}, {"controls", controls},
                  {"fixed_effects", !bs_no_fe}, {"svg", svg}, {"filter", common.filter}};
      artifacts.add(dir / "run_meta.json",
                    dump(run_meta("binscatter", cfg, common, sample_meta(lp, b.n_obs, distinct_entities(lp.data, rows)),
                                  json::array({"lines are unweighted OLS on bin means"}))));
    } else if (mc->parsed()) {
      DgpConfig cfg = file_config.contains("dgp") ? dgp_from_json(file_config.at("dgp")) : DgpConfig{};
      const auto seed = require_seed(common, "montecarlo");
      eopts.controls = !mc_no_controls;
      eopts.include_jump = !mc_no_jump;
      const auto est = make_estimator(estimator, cfg, eopts);
      const auto rep = monte_carlo(cfg, est, reps, seed);
      artifacts.add(dir / "montecarlo.json", dump(report::to_json(rep)));
      std::ostringstream p;
      csv::write_row(p, {"replication", "parameter", "estimate", "se"});
      for (std::size_t r = 0; r < rep.replications.size(); ++r) {
        for (const auto& [name, e] : rep.replications[r].estimates) {
          csv::write_row(p, {std::to_string(r), name, csv::format_number(e.estimate), csv::format_number(e.se)});
        }
        for (const auto& [name, pv] : rep.replications[r].p_values) {
          csv::write_row(p, {std::to_string(r), "p_value:" + name, csv::format_number(pv), "NA"});
        }
      }
      artifacts.add(dir / "replications.csv", p.str());
      json jcfg = {{"dgp", dgp_to_json(cfg)},       {"estimator", estimator},   {"reps", reps},
                   {"bootstrap", eopts.bootstrap},  {"trim", eopts.trim},       {"leads", eopts.n_leads},
                   {"lags", eopts.n_lags},          {"controls", eopts.controls}, {"jump", eopts.include_jump}};
      json sample = {{"replications", reps}, {"failures", rep.failures}};
      artifacts.add(dir / "run_meta.json", dump(run_meta("montecarlo", jcfg, common, sample, json::array())));
    } else if (sm->parsed()) {
      const auto lp = load(common);
      std::vector<std::pair<std::string, std::string>> vars;
      const std::pair<const char*, std::string_view> table[] = {
          {"Log real per capita school spending", columns::kOutcome},
          {"Vote share of the nonagrarian interests", columns::kShare},
          {"Number of votes for landowners", columns::kVotesLand},
          {"Number of votes for the nonagrarian interests", columns::kVotesNonagr},
          {"Population size", columns::kPopulation}};
      for (const auto& [label, name] : table) {
        if (lp.data.has(name)) vars.emplace_back(label, std::string(name));
      }
      if (vars.empty()) fail(Errc::MissingColumn, "none of the summary variables are present");
      const auto rows = report::summarize(lp.data, vars);
      std::ostringstream p;
      report::write_summary_csv(p, rows);
      artifacts.add(dir / "summary.csv", p.str());
      int y0 = 0, y1 = 0;
      if (lp.data.n_rows() > 0) {
        const auto years = lp.data.years();
        y0 = *std::min_element(years.begin(), years.end());
        y1 = *std::max_element(years.begin(), years.end());
      }
      const auto text = report::summary_text(rows, y0, y1);
      artifacts.add(dir / "summary.txt", text);
      out << text;
      json cfg = {{"filter", common.filter}};
      json sample = {{"input_rows", lp.input_rows},
                     {"dropped_by_filter", lp.dropped_by_filter},
                     {"dropped_by_missingness", 0},
                     {"used_rows", lp.data.n_rows()},
                     {"entities_used", lp.data.n_entities()},
                     {"non_positive_outcome_cells", lp.non_positive},
                     {"filter", lp.filter}};
      artifacts.add(dir / "run_meta.json", dump(run_meta("summary", cfg, common, sample, json::array())));
    }
    artifacts.commit();
    return kExitOk;
  } catch (const Error& e) {
    report_error(err, category_name(category(e.code())), std::string(to_string(e.code())), e.what());
    return exit_code(category(e.code()));
  } catch (const std::exception& e) {
    report_error(err, "NumericalError", "Internal", e.what());
    return kExitNumerical;
  }
}

}  // namespace wvp::cli
