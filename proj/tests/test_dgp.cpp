#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "wvp/dgp.hpp"
#include "wvp/error.hpp"
#include "wvp/kernels.hpp"
#include "wvp/threshold.hpp"

using namespace wvp;

TEST_CASE("vote rules") {
  CHECK(votes_landowner(10000.0) == doctest::Approx(60.0).epsilon(1e-14));
  CHECK(votes_nonagrarian(100.0) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(votes_nonagrarian(100.0, VoteRule::Prose) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(votes_landowner(0.0) == 0.0);
  CHECK_THROWS_AS(votes_landowner(-1.0), Error);
  try {
    votes_nonagrarian(-5.0);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NegativeValue);
  }
}

TEST_CASE("simulate_panel is deterministic in the seed") {
  DgpConfig cfg;
  cfg.n_entities = 30;
  cfg.n_years = 8;
  cfg.missing_rate = 0.1;
  const auto a = simulate_panel(cfg).data;
  kernels::set_threads(3);
  const auto b = simulate_panel(cfg).data;
  kernels::set_threads(kernels::max_threads());
  REQUIRE(a.n_rows() == b.n_rows());
  for (const char* col : {"school_spend", "population", "votes_nonagr", "votes_land"}) {
    for (std::size_t i = 0; i < a.n_rows(); ++i) {
      const double x = a.column(col)[i], y = b.column(col)[i];
      CHECK((x == y || (is_missing(x) && is_missing(y))));
    }
  }
  cfg.seed = 2;
  const auto c = simulate_panel(cfg).data;
  CHECK(c.column("population")[0] != a.column("population")[0]);
}

TEST_CASE("an entity's draws do not depend on the panel width") {
  DgpConfig cfg;
  cfg.n_entities = 5;
  cfg.n_years = 6;
  const auto small = simulate_panel(cfg).data;
  cfg.n_entities = 50;
  const auto big = simulate_panel(cfg).data;
  for (std::size_t i = 0; i < small.n_rows(); ++i) {
    CHECK(small.column("votes_nonagr")[i] == big.column("votes_nonagr")[i]);
    CHECK(small.column("school_spend")[i] == big.column("school_spend")[i]);
  }
}

TEST_CASE("default calibration of the vote share") {
  DgpConfig cfg;
  const auto d = derive_standard_variables(simulate_panel(cfg).data).data;
  const auto s = d.column("share");
  double m = 0.0;
  for (double v : s) m += v;
  m /= static_cast<double>(s.size());
  double ss = 0.0;
  for (double v : s) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(s.size() - 1));
  CHECK(std::abs(m - 0.31) < 0.05);
  CHECK(std::abs(sd - 0.22) < 0.05);
  CHECK(d.n_rows() == 200u * 29u);
  CHECK(d.years().front() == 1881);
  CHECK(d.years().back() == 1909);
}

TEST_CASE("missingness removes cells, not rows") {
  DgpConfig cfg;
  cfg.n_entities = 100;
  cfg.n_years = 10;
  cfg.missing_rate = 0.2;
  const auto d = simulate_panel(cfg).data;
  CHECK(d.n_rows() == 1000u);
  std::size_t miss = 0;
  for (double v : d.column("school_spend")) miss += is_missing(v) ? 1 : 0;
  CHECK(miss > 120u);
  CHECK(miss < 280u);
}

TEST_CASE("invalid configurations") {
  auto code = [](DgpConfig c) {
    try {
      c.validate();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  DgpConfig c;
  c.gamma = 1.0;
  CHECK(code(c) == Errc::ConfigInvalid);
  c = {};
  c.landowner_effects = {0.1, 0.2};
  CHECK(code(c) == Errc::ConfigInvalid);
  c = {};
  c.noise_sd = -1.0;
  CHECK(code(c) == Errc::ConfigInvalid);
  c = {};
  c.missing_rate = 1.0;
  CHECK(code(c) == Errc::ConfigInvalid);
  c = {};
  c.n_entities = 0;
  CHECK(code(c) == Errc::ConfigInvalid);
  CHECK(code(DgpConfig{}) == Errc::Io);
}

TEST_CASE("lag burn-in and lead tail keep the observed window") {
  DgpConfig cfg;
  cfg.n_entities = 10;
  cfg.n_years = 7;
  cfg.landowner_effects = {0.1, 0.1, 0.1};
  cfg.nonagrarian_effects = {0.3, 0.2, 0.1};
  cfg.lead_effects = {0.05};
  const auto d = simulate_panel(cfg).data;
  CHECK(d.n_rows() == 70u);
  CHECK(d.years().front() == cfg.first_year);
}

TEST_CASE("Monte Carlo is reproducible and independent of the thread count") {
  DgpConfig cfg;
  cfg.n_entities = 60;
  cfg.n_years = 10;
  const auto est = make_estimator("threshold", cfg);
  kernels::set_threads(1);
  const auto a = monte_carlo(cfg, est, 3, 11);
  kernels::set_threads(4);
  const auto b = monte_carlo(cfg, est, 3, 11);
  kernels::set_threads(kernels::max_threads());
  CHECK(a.failures == 0);
  REQUIRE(a.parameters.count("beta_N") == 1);
  CHECK(a.parameters.at("beta_N").mean == b.parameters.at("beta_N").mean);
  CHECK(a.parameters.at("beta_N").truth == 0.41);
  CHECK(a.parameters.at("beta_N").n == 3u);
  CHECK(a.rejection_rate.count("regime_difference") == 1);
  for (int r = 0; r < 3; ++r) {
    CHECK(a.replications[static_cast<std::size_t>(r)].estimates.at("delta").estimate ==
          b.replications[static_cast<std::size_t>(r)].estimates.at("delta").estimate);
  }
  CHECK_THROWS_AS(monte_carlo(cfg, est, 1, 11), Error);
}

TEST_CASE("Monte Carlo summaries and failure counting") {
  DgpConfig cfg;
  cfg.n_entities = 10;
  cfg.n_years = 5;
  Estimator mean_y;
  mean_y.name = "mean";
  mean_y.truth = {{"m", 0.0}};
  mean_y.run = [](const PanelDataset& d, std::uint64_t seed) {
    if (seed % 2 == 0) fail(Errc::EmptySample, "even seed");
    ReplicationResult r;
    r.estimates["m"] = {1.0, 1.0};
    r.p_values["t"] = 0.01;
    (void)d;
    return r;
  };
  const auto rep = monte_carlo(cfg, mean_y, 40, 3);
  CHECK(rep.failures > 0);
  CHECK(rep.failures < 40);
  CHECK(rep.failure_messages.size() == static_cast<std::size_t>(rep.failures));
  const auto& s = rep.parameters.at("m");
  CHECK(s.n == static_cast<std::size_t>(40 - rep.failures));
  CHECK(s.bias == 1.0);
  CHECK(s.sd == 0.0);
  CHECK(s.coverage == 1.0);  // |1 - 0| <= 1.96
  CHECK(rep.rejection_rate.at("t") == 1.0);
}

TEST_CASE("unknown estimator names are rejected") {
  CHECK_THROWS_AS(make_estimator("nope", DgpConfig{}), Error);
}

TEST_CASE("regime-dl truth accumulates the planted lag effects") {
  DgpConfig cfg;
  cfg.landowner_effects = {0.1, 0.2, 0.3};
  cfg.nonagrarian_effects = {0.5, 0.1, 0.0};
  EstimatorOptions o;
  o.n_lags = 4;
  const auto est = make_estimator("regime-dl", cfg, o);
  CHECK(est.truth.at("cum_landowner_h0") == doctest::Approx(0.1));
  CHECK(est.truth.at("cum_landowner_h2") == doctest::Approx(0.6));
  CHECK(est.truth.at("cum_landowner_h4") == doctest::Approx(0.6));
  CHECK(est.truth.at("cum_nonagrarian_h1") == doctest::Approx(0.6));
}
