#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "wvp/dgp.hpp"
#include "wvp/error.hpp"
#include "wvp/regression.hpp"

using namespace wvp;
using testutil::rel_diff;

namespace {

DesignMatrix design(std::initializer_list<std::initializer_list<double>> rows, std::vector<std::string> names) {
  DesignMatrix X;
  X.names = std::move(names);
  X.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(X.names.size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) X.values(i, j++) = v;
    ++i;
  }
  return X;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

PanelModel xmodel(std::vector<std::string> xs, const PanelDataset& d) {
  PanelModel m;
  m.outcome = "y";
  for (const auto& x : xs) {
    const auto c = d.column(x);
    m.regressors.push_back({x, std::vector<double>(c.begin(), c.end())});
  }
  return m;
}

}  // namespace

TEST_CASE("ols_fit hand-solved examples") {
  SUBCASE("normal equations by hand") {
    const auto f = ols_fit(design({{1, 0}, {1, 1}, {1, 2}}, {"const", "x"}), vec({1, 2, 4}));
    CHECK(f.coef("const") == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
    CHECK(f.coef("x") == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(f.ssr == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  }
  SUBCASE("exact fit") {
    const auto f = ols_fit(design({{1}, {2}, {3}}, {"x"}), vec({2, 4, 6}));
    CHECK(f.coef("x") == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(f.ssr < 1e-28);
  }
  SUBCASE("duplicated column is aliased, not zeroed") {
    const auto f = ols_fit(design({{1, 1, 0}, {2, 2, 1}, {3, 3, 0}, {4, 4, 2}}, {"a", "b", "c"}), vec({1, 3, 2, 5}));
    CHECK(f.rank == 2);
    CHECK(f.aliased[0] != f.aliased[1]);
    const std::string dropped = f.aliased[0] ? "a" : "b";
    CHECK(is_missing(f.coef(dropped)));
    CHECK(is_missing(f.se(dropped)));
    CHECK_FALSE(f.warnings.empty());
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(ols_fit(DesignMatrix{}, Eigen::VectorXd()), Error);
    try {
      ols_fit(design({{0}, {0}}, {"z"}), vec({1, 2}));
      FAIL("expected AllColumnsAliased");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::AllColumnsAliased);
    }
  }
}

TEST_CASE("residuals are orthogonal to the retained design and SSR matches") {
  const auto d = testutil::random_panel(11, 40, 8);
  auto m = xmodel({"x1", "x2", "x3"}, d);
  const auto f = fit_panel_model(d, m);
  const Eigen::VectorXd xe = f.design.transpose() * f.residuals;
  const double scale = f.design.cwiseAbs().maxCoeff() * f.residuals.cwiseAbs().maxCoeff() * f.n_obs;
  CHECK(xe.cwiseAbs().maxCoeff() / scale < 1e-6);
  CHECK(f.ssr == doctest::Approx(f.residuals.squaredNorm()).epsilon(1e-12));
  // covariance symmetric PSD
  CHECK((f.covariance - f.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.covariance);
  CHECK(eig.eigenvalues().minCoeff() > -1e-14);
}

TEST_CASE("CR1 sandwich matches an explicit loop computation") {
  const auto d = testutil::random_panel(12, 25, 6, 0.0);
  auto m = xmodel({"x1", "x2"}, d);
  m.fe.entity_effects = m.fe.time_effects = false;
  const auto f = fit_panel_model(d, m);

  // (X'X)^-1 via normal equations, meat by explicit cluster loops
  const auto& X = f.design;
  const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
  const auto rows = f.rows;
  std::map<std::size_t, Eigen::VectorXd> score;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto g = d.entity_index()[rows[i]];
    if (!score.count(g)) score[g] = Eigen::VectorXd::Zero(X.cols());
    score[g] += X.row(static_cast<Eigen::Index>(i)).transpose() * f.residuals(static_cast<Eigen::Index>(i));
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  for (const auto& [g, s] : score) meat += s * s.transpose();
  const double G = static_cast<double>(score.size()), N = static_cast<double>(f.n_obs),
               K = static_cast<double>(X.cols());
  const Eigen::MatrixXd V = (G / (G - 1)) * ((N - 1) / (N - K)) * bread * meat * bread;
  CHECK(f.cluster_count == score.size());
  for (Eigen::Index a = 0; a < V.rows(); ++a)
    for (Eigen::Index b = 0; b < V.cols(); ++b) CHECK(rel_diff(f.covariance(a, b), V(a, b)) < 1e-10);
}

TEST_CASE("singleton clusters give HC1; zero residuals give a zero matrix") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  const Eigen::Index n = 60;
  DesignMatrix X;
  X.names = {"const", "x"};
  X.values.resize(n, 2);
  Eigen::VectorXd y(n);
  std::vector<double> ids(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    X.values(i, 0) = 1;
    X.values(i, 1) = z(rng);
    y(i) = 1 + 0.5 * X.values(i, 1) + z(rng) * (1 + std::abs(X.values(i, 1)));
    ids[static_cast<std::size_t>(i)] = static_cast<double>(i);
  }
  const auto f = ols_fit(X, y);
  const auto V = cluster_covariance(f, ids);
  const Eigen::MatrixXd bread = (X.values.transpose() * X.values).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
  for (Eigen::Index i = 0; i < n; ++i) meat += f.residuals(i) * f.residuals(i) * X.values.row(i).transpose() * X.values.row(i);
  const Eigen::MatrixXd hc1 = (double(n) / double(n - 2)) * bread * meat * bread;
  CHECK((V - hc1).cwiseAbs().maxCoeff() < 1e-12 * hc1.cwiseAbs().maxCoeff());

  const auto exact = ols_fit(X, X.values * vec({1.0, 2.0}));
  CHECK(cluster_covariance(exact, ids).cwiseAbs().maxCoeff() < 1e-25);

  std::vector<double> one(static_cast<std::size_t>(n), 1.0);
  CHECK_THROWS_AS(cluster_covariance(f, one), Error);
  ids[3] = kMissing;
  try {
    cluster_covariance(f, ids);
    FAIL("expected MissingClusterId");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingClusterId);
  }
}

TEST_CASE("clustered SE exceeds classical SE under entity-level shocks") {
  DgpConfig cfg;
  cfg.n_entities = 20;
  cfg.n_years = 29;
  cfg.noise_ar = 0.9;
  cfg.seed = 5;
  const auto d = derive_standard_variables(simulate_panel(cfg).data).data;
  PanelModel m;
  const auto s = d.column("share");
  m.regressors.push_back({"share", std::vector<double>(s.begin(), s.end())});
  const auto clustered = fit_panel_model(d, m);
  m.cluster = false;
  const auto classical = fit_panel_model(d, m);
  CHECK(clustered.se("share") > classical.se("share"));
}

TEST_CASE("wald tests") {
  const auto d = testutil::random_panel(13, 30, 8);
  auto m = xmodel({"x1", "x2", "x3"}, d);
  const auto f = fit_panel_model(d, m);

  SUBCASE("single restriction equals squared t") {
    const auto w = wald_test_zero(f, {"x2"});
    const double t = f.coef("x2") / f.se("x2");
    CHECK(w.f == doctest::Approx(t * t).epsilon(1e-12));
    CHECK(w.df1 == 1);
    CHECK(w.df2 == static_cast<double>(f.cluster_count - 1));
  }
  SUBCASE("joint restriction against explicit quadratic form") {
    const auto w = wald_test(f, {{{{"x1", 1.0}, {"x2", -1.0}}, 0.5}, {{{"x3", 1.0}}, 1.5}});
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2, 3);
    R(0, 0) = 1;
    R(0, 1) = -1;
    R(1, 2) = 1;
    const Eigen::Vector2d diff = R * f.coefficients - Eigen::Vector2d(0.5, 1.5);
    const double F = diff.dot((R * f.covariance * R.transpose()).inverse() * diff) / 2.0;
    CHECK(w.f == doctest::Approx(F).epsilon(1e-10));
  }
  SUBCASE("F tail probabilities against tabulated quantiles") {
    CHECK(f_upper_tail(3.4928, 2, 20) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(f_upper_tail(4.3512, 1, 20) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(f_upper_tail(0.0, 2, 20) == 1.0);
  }
  SUBCASE("vacuous and degenerate cases") {
    CHECK(wald_test_zero(f, {}).vacuous);
    const auto exact = ols_fit(design({{1, 0}, {1, 1}, {1, 2}, {1, 3}}, {"c", "x"}), vec({1, 3, 5, 7}));
    const auto w = wald_test(exact, {{{{"x", 1.0}}, 2.0}});
    CHECK(w.zero_variance);
    CHECK(is_missing(w.f));
  }
  SUBCASE("aliased coefficients make the restriction variance singular") {
    auto X = design({{1, 1, 2}, {2, 2, 1}, {3, 3, 5}, {4, 4, 3}, {5, 5, 8}}, {"a", "b", "c"});
    const auto g = ols_fit(X, vec({1, 2, 2, 4, 3}));
    try {
      wald_test_zero(g, {"a", "b"});
      FAIL("expected SingularRestrictionVariance");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SingularRestrictionVariance);
    }
  }
}

TEST_CASE("FWL residualization") {
  const auto d = testutil::random_panel(14, 30, 8);
  SUBCASE("identity without controls or effects") {
    FixedEffectsSpec none;
    none.entity_effects = none.time_effects = false;
    const auto r = fwl_residualize(d, {"y"}, {}, none);
    for (std::size_t i = 0; i < r.rows.size(); ++i) CHECK(r.values(static_cast<Eigen::Index>(i), 0) == d.column("y")[r.rows[i]]);
  }
  SUBCASE("target equal to a control residualizes to zero") {
    const auto r = fwl_residualize(d, {"x1"}, {"x1", "x2"}, {});
    CHECK(r.values.cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("two-step slope equals the joint coefficient") {
    const auto r = fwl_residualize(d, {"y", "x1"}, {"x2", "x3"}, {});
    const double slope = r.values.col(1).dot(r.values.col(0)) / r.values.col(1).squaredNorm();
    const auto joint = fit_panel_model(d, xmodel({"x1", "x2", "x3"}, d));
    CHECK(rel_diff(slope, joint.coef("x1")) < 1e-8);
  }
}

TEST_CASE("within-transform fits agree with the dummy-variable oracle") {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const auto d = testutil::random_panel(seed, 30, 9, 0.2);
    auto m = xmodel({"x1", "x2", "x3"}, d);
    m.cluster = false;
    const auto within = fit_panel_model(d, m);
    const auto oracle = oracle_dummy_ols(d, m);
    for (const auto* name : {"x1", "x2", "x3"}) {
      CHECK(rel_diff(within.coef(name), oracle.coef(name)) < 1e-8);
      // same residual df, so classical SEs agree too
      CHECK(rel_diff(within.se(name), oracle.se(name)) < 1e-8);
    }
    CHECK(rel_diff(within.ssr, oracle.ssr) < 1e-8);
  }
}

TEST_CASE("oracle handles a single-entity panel and guards its size") {
  const auto d = testutil::random_panel(30, 1, 12, 0.0);
  auto m = xmodel({"x1", "x2"}, d);
  m.cluster = false;
  m.fe.time_effects = false;
  const auto within = fit_panel_model(d, m);
  const auto oracle = oracle_dummy_ols(d, m);
  CHECK(rel_diff(within.coef("x1"), oracle.coef("x1")) < 1e-8);

  const auto big = testutil::random_panel(31, 600, 10, 0.0);
  try {
    oracle_dummy_ols(big, xmodel({"x1"}, big));
    FAIL("expected TooLargeForOracle");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooLargeForOracle);
  }
}

TEST_CASE("permuting input rows leaves fits unchanged") {
  const auto d = testutil::random_panel(40, 25, 8, 0.15);
  std::vector<std::string> ent;
  std::vector<int> yr;
  std::map<std::string, std::vector<double>> vars;
  std::vector<std::size_t> perm(d.n_rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(1));
  for (auto r : perm) {
    ent.push_back(d.entity_ids()[d.entity_index()[r]]);
    yr.push_back(d.years()[r]);
    for (const auto* v : {"y", "x1", "x2", "x3"}) vars[v].push_back(d.column(v)[r]);
  }
  const auto p = PanelDataset::from_rows(ent, yr, vars);
  const auto a = fit_panel_model(d, xmodel({"x1", "x2", "x3"}, d));
  const auto b = fit_panel_model(p, xmodel({"x1", "x2", "x3"}, p));
  for (const auto* name : {"x1", "x2", "x3"}) {
    CHECK(rel_diff(a.coef(name), b.coef(name)) < 1e-12);
    CHECK(rel_diff(a.se(name), b.se(name)) < 1e-12);
  }
  CHECK(rel_diff(a.ssr, b.ssr) < 1e-12);
}
