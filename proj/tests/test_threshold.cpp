#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "wvp/dgp.hpp"
#include "wvp/error.hpp"
#include "wvp/kernels.hpp"
#include "wvp/threshold.hpp"

using namespace wvp;
using testutil::rel_diff;

namespace {

PanelDataset simulated(DgpConfig cfg) { return derive_standard_variables(simulate_panel(cfg).data).data; }

DgpConfig noiseless(double beta_l, double beta_n, double delta) {
  DgpConfig cfg;
  cfg.n_entities = 120;
  cfg.n_years = 15;
  cfg.noise_sd = 0.0;
  cfg.landowner_effects = {beta_l};
  cfg.nonagrarian_effects = {beta_n};
  cfg.delta = delta;
  cfg.seed = 77;
  return cfg;
}

Errc code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::Io;
}

}  // namespace

TEST_CASE("LR critical value") {
  CHECK(std::abs(lr_critical_value(0.05) - 7.3523) < 5e-5);
  CHECK(lr_critical_value(0.05) == doctest::Approx(-2.0 * std::log(1.0 - std::sqrt(0.95))).epsilon(1e-15));
  CHECK(lr_critical_value(0.10) < lr_critical_value(0.05));
}

TEST_CASE("candidate grid") {
  std::vector<double> s;
  for (int i = 0; i < 1000; ++i) s.push_back((i + 0.5) / 1000.0);
  const auto g = threshold_grid(s, 0.10);
  CHECK(g.size() == 161);
  CHECK(g.front() == doctest::Approx(0.0995).epsilon(1e-12));
  CHECK(std::adjacent_find(g.begin(), g.end(), [](double a, double b) { return a >= b; }) == g.end());

  // ties collapse to distinct values; 0 and 1 are never candidates
  std::vector<double> few(200, 0.0);
  for (int i = 0; i < 100; ++i) few[static_cast<std::size_t>(i)] = 0.3;
  CHECK(threshold_grid(few, 0.10).size() == 1);
  CHECK(code_of([] { threshold_grid({}, 0.1); }) == Errc::DegenerateGrid);
  CHECK(code_of([] { threshold_grid({0.5}, 0.6); }) == Errc::InvalidArgument);
}

TEST_CASE("noiseless kink is recovered exactly by fit_threshold") {
  const auto d = simulated(noiseless(0.0, 0.45, 0.0));
  const auto tf = fit_threshold(d, ThresholdSpec{});
  CHECK(std::abs(tf.beta_L.estimate - 0.0) < 1e-8);
  CHECK(std::abs(tf.beta_N.estimate - 0.45) < 1e-8);
  CHECK(std::abs(tf.delta.estimate) < 1e-8);
  CHECK(tf.fit.cluster_count == 120);
  const auto w = regime_difference_test(tf);
  CHECK(w.df1 == 2);
  CHECK(w.df2 == 119.0);
  CHECK(w.p_value < 1e-12);
}

TEST_CASE("fit_threshold preconditions") {
  const auto d = simulated(noiseless(0.0, 0.45, 0.0));
  ThresholdSpec spec;
  const auto s = d.column("share");
  spec.gamma = *std::max_element(s.begin(), s.end());
  CHECK(code_of([&] { fit_threshold(d, spec); }) == Errc::EmptyRegime);
  spec.gamma = 1.0;
  CHECK(code_of([&] { fit_threshold(d, spec); }) == Errc::InvalidArgument);
  spec.gamma = 0.5;
  spec.include_jump = false;
  const auto tf = fit_threshold(d, spec);
  CHECK(is_missing(tf.delta.estimate));
  CHECK(code_of([&] { regime_difference_test(tf); }) == Errc::InvalidArgument);
}

TEST_CASE("without a jump the fitted response is continuous at gamma") {
  DgpConfig cfg = noiseless(0.04, 0.41, 0.0);
  cfg.noise_sd = 0.3;
  const auto d = simulated(cfg);
  ThresholdSpec spec;
  spec.include_jump = false;
  const auto tf = fit_threshold(d, spec);
  const double g = spec.gamma;
  const double left = tf.fit.coef("share") * g;
  const double right = tf.fit.coef("share") * g + tf.fit.coef("share.kink") * (g - g);
  CHECK(std::abs(left - right) < 1e-12);
}

TEST_CASE("equivalent regime parametrization gives identical fitted values") {
  DgpConfig cfg = noiseless(0.04, 0.41, 0.02);
  cfg.noise_sd = 0.3;
  const auto d = simulated(cfg);
  const auto tf = fit_threshold(d, ThresholdSpec{});

  const auto s = d.column("share");
  PanelModel alt;
  Regressor below{"s_below", {}}, above{"s_above", {}}, jump{"jump", {}};
  for (double v : s) {
    below.values.push_back(v <= 0.5 ? v : 0.0);
    above.values.push_back(v > 0.5 ? v : 0.0);
    jump.values.push_back(v > 0.5 ? 1.0 : 0.0);
  }
  alt.regressors = {below, above, jump};
  alt.controls = default_controls();
  const auto f = fit_panel_model(d, alt);
  CHECK((f.residuals - tf.fit.residuals).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(rel_diff(f.coef("s_above"), tf.beta_N.estimate) < 1e-8);
}

TEST_CASE("profile SSR agrees with direct fits and the minimum is global") {
  DgpConfig cfg = noiseless(0.04, 0.41, 0.02);
  cfg.noise_sd = 0.3;
  cfg.n_entities = 60;
  const auto d = simulated(cfg);
  const auto search = estimate_threshold(d, ThresholdSpec{});
  for (const auto& p : search.profile) CHECK(search.ssr <= p.ssr);
  for (std::size_t i = 0; i < search.profile.size(); i += 23) {
    ThresholdSpec spec;
    spec.gamma = search.profile[i].gamma;
    CHECK(rel_diff(fit_threshold(d, spec).ssr, search.profile[i].ssr) < 1e-8);
  }
  const auto ci = threshold_confidence_interval(search.profile, search.n_obs);
  CHECK(ci.lower <= search.gamma);
  CHECK(search.gamma <= ci.upper);
  CHECK(ci.accepted >= 1);
  CHECK(code_of([] { threshold_confidence_interval({}, 10); }) == Errc::EmptyProfile);
}

TEST_CASE("profile is independent of the thread count") {
  DgpConfig cfg = noiseless(0.04, 0.41, 0.02);
  cfg.noise_sd = 0.3;
  cfg.n_entities = 60;
  const auto d = simulated(cfg);
  kernels::set_threads(1);
  const auto a = estimate_threshold(d, ThresholdSpec{});
  kernels::set_threads(4);
  const auto b = estimate_threshold(d, ThresholdSpec{});
  kernels::set_threads(kernels::max_threads());
  REQUIRE(a.profile.size() == b.profile.size());
  for (std::size_t i = 0; i < a.profile.size(); ++i) CHECK(a.profile[i].ssr == b.profile[i].ssr);
}

TEST_CASE("exact SSR ties resolve toward 0.5") {
  // an all-zero outcome fits every candidate with SSR exactly zero
  auto d = simulated(noiseless(0.0, 0.0, 0.0));
  d = d.with_column("y", std::vector<double>(d.n_rows(), 0.0), "test");
  const auto search = estimate_threshold(d, ThresholdSpec{});
  double closest = search.profile.front().gamma;
  for (const auto& p : search.profile) {
    REQUIRE(p.ssr == 0.0);
    if (std::abs(p.gamma - 0.5) < std::abs(closest - 0.5)) closest = p.gamma;
  }
  CHECK(search.gamma == closest);
}

TEST_CASE("vote scaling leaves threshold estimates unchanged") {
  DgpConfig cfg = noiseless(0.04, 0.41, 0.02);
  cfg.noise_sd = 0.3;
  cfg.n_entities = 60;
  const auto raw = simulate_panel(cfg).data;
  auto scale = [&](double c) {
    auto vn = raw.column("votes_nonagr");
    auto vl = raw.column("votes_land");
    std::vector<double> a(vn.begin(), vn.end()), b(vl.begin(), vl.end());
    for (auto& v : a) v *= c;
    for (auto& v : b) v *= c;
    return derive_standard_variables(raw.with_column("votes_nonagr", a, "t").with_column("votes_land", b, "t")).data;
  };
  const auto d1 = scale(1.0), d4 = scale(4.0);
  for (std::size_t i = 0; i < d1.n_rows(); ++i) REQUIRE(d1.column("share")[i] == d4.column("share")[i]);
  const auto a = fit_threshold(d1, ThresholdSpec{});
  const auto b = fit_threshold(d4, ThresholdSpec{});
  CHECK(rel_diff(a.beta_L.estimate, b.beta_L.estimate) < 1e-9);
  CHECK(rel_diff(a.beta_N.estimate, b.beta_N.estimate) < 1e-9);
  CHECK(rel_diff(a.delta.estimate, b.delta.estimate) < 1e-9);
  CHECK(rel_diff(a.fit.coef("votes_nonagr"), 4.0 * b.fit.coef("votes_nonagr")) < 1e-8);
  CHECK(estimate_threshold(d1, ThresholdSpec{}).gamma == estimate_threshold(d4, ThresholdSpec{}).gamma);
}

TEST_CASE("bootstrap linearity test: determinism, thread independence, power") {
  DgpConfig cfg = noiseless(0.0, 0.0, 0.0);
  cfg.noise_sd = 0.3;
  cfg.n_entities = 60;
  const auto null_data = simulated(cfg);
  kernels::set_threads(1);
  const auto a = bootstrap_linearity_test(null_data, ThresholdSpec{}, 0.10, 99, 123);
  kernels::set_threads(3);
  const auto b = bootstrap_linearity_test(null_data, ThresholdSpec{}, 0.10, 99, 123);
  kernels::set_threads(kernels::max_threads());
  CHECK(a.p_value == b.p_value);
  CHECK(a.bootstrap_sup_f == b.bootstrap_sup_f);
  CHECK(a.sup_f == b.sup_f);
  const auto c = bootstrap_linearity_test(null_data, ThresholdSpec{}, 0.10, 99, 124);
  CHECK(c.bootstrap_sup_f != a.bootstrap_sup_f);
  CHECK(code_of([&] { bootstrap_linearity_test(null_data, ThresholdSpec{}, 0.10, 50, 1); }) == Errc::InvalidArgument);

  DgpConfig strong = cfg;
  strong.nonagrarian_effects = {2.0};
  strong.noise_sd = 0.1;
  const auto p = bootstrap_linearity_test(simulated(strong), ThresholdSpec{}, 0.10, 99, 5).p_value;
  CHECK(p < 0.01);
}
