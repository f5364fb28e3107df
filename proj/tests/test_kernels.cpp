#include <doctest.h>

#include <random>

#include "wvp/kernels.hpp"

using namespace wvp;

namespace {

kernels::Groups random_groups(std::uint64_t seed, int E, int T, double keep) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution k(keep);
  kernels::Groups g;
  g.n_entities = E;
  g.n_periods = T;
  for (int e = 0; e < E; ++e) {
    for (int t = 0; t < T; ++t) {
      if (!k(rng)) continue;
      g.entity.push_back(e);
      g.period.push_back(t);
    }
  }
  return g;
}

Eigen::MatrixXd random_matrix(std::uint64_t seed, Eigen::Index n, Eigen::Index k) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = z(rng);
  return m;
}

}  // namespace

TEST_CASE("parallel demean is bit-identical to the serial reference for any thread count") {
  const auto g = random_groups(1, 120, 25, 0.8);
  const auto X = random_matrix(2, static_cast<Eigen::Index>(g.size()), 7);
  for (bool ent : {true, false}) {
    for (bool tim : {true, false}) {
      if (!ent && !tim) continue;
      kernels::DemeanOptions o;
      o.entity = ent;
      o.time = tim;
      Eigen::MatrixXd ref = X;
      const auto rs = kernels::reference::demean(ref, g, o);
      for (int threads : {1, 2, 3, 8}) {
        kernels::set_threads(threads);
        Eigen::MatrixXd par = X;
        const auto ps = kernels::demean(par, g, o);
        CHECK(ps.iterations == rs.iterations);
        CHECK(ps.converged == rs.converged);
        CHECK((par.array() == ref.array()).all());
      }
    }
  }
  kernels::set_threads(kernels::max_threads());
}

TEST_CASE("demean reports non-convergence at the iteration cap") {
  const auto g = random_groups(3, 40, 10, 0.6);
  Eigen::MatrixXd X = random_matrix(4, static_cast<Eigen::Index>(g.size()), 2);
  kernels::DemeanOptions o;
  o.max_iterations = 1;
  const auto s = kernels::demean(X, g, o);
  CHECK_FALSE(s.converged);
}

TEST_CASE("parallel cluster scores are bit-identical to the reference") {
  const auto g = random_groups(5, 200, 15, 0.9);
  const auto n = static_cast<Eigen::Index>(g.size());
  const auto X = random_matrix(6, n, 5);
  const Eigen::VectorXd e = random_matrix(7, n, 1).col(0);
  const auto ref = kernels::reference::cluster_scores(X, e, g.entity, g.n_entities);
  for (int threads : {1, 2, 5}) {
    kernels::set_threads(threads);
    const auto par = kernels::cluster_scores(X, e, g.entity, g.n_entities);
    CHECK((par.array() == ref.array()).all());
  }
  kernels::set_threads(kernels::max_threads());
  // and agree with a direct per-cluster product
  Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(g.n_entities, 5);
  for (Eigen::Index i = 0; i < n; ++i) direct.row(g.entity[static_cast<std::size_t>(i)]) += e(i) * X.row(i);
  CHECK((direct - ref).cwiseAbs().maxCoeff() < 1e-12);
}
