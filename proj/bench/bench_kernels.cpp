#include <benchmark/benchmark.h>

#include <random>

#include "wvp/dgp.hpp"
#include "wvp/kernels.hpp"
#include "wvp/threshold.hpp"

namespace {

// Roughly the size of the historical panel: 2,193 entities over 29 years.
struct Fixture {
  wvp::kernels::Groups groups;
  Eigen::MatrixXd X;
  Eigen::VectorXd e;

  Fixture(int n_entities, int n_years, int k) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    std::bernoulli_distribution keep(0.97);
    groups.n_entities = n_entities;
    groups.n_periods = n_years;
    for (int i = 0; i < n_entities; ++i) {
      for (int t = 0; t < n_years; ++t) {
        if (!keep(rng)) continue;
        groups.entity.push_back(i);
        groups.period.push_back(t);
      }
    }
    const auto n = static_cast<Eigen::Index>(groups.size());
    X.resize(n, k);
    e.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (int c = 0; c < k; ++c) X(r, c) = z(rng);
      e(r) = z(rng);
    }
  }
};

const Fixture& fixture() {
  static const Fixture f(2193, 29, 6);
  return f;
}

void BM_DemeanParallel(benchmark::State& state) {
  const auto& f = fixture();
  wvp::kernels::set_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Eigen::MatrixXd m = f.X;
    benchmark::DoNotOptimize(wvp::kernels::demean(m, f.groups, {}));
  }
}

void BM_DemeanReference(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    Eigen::MatrixXd m = f.X;
    benchmark::DoNotOptimize(wvp::kernels::reference::demean(m, f.groups, {}));
  }
}

void BM_ClusterScoresParallel(benchmark::State& state) {
  const auto& f = fixture();
  wvp::kernels::set_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(wvp::kernels::cluster_scores(f.X, f.e, f.groups.entity, f.groups.n_entities));
  }
}

void BM_ClusterScoresReference(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(wvp::kernels::reference::cluster_scores(f.X, f.e, f.groups.entity, f.groups.n_entities));
  }
}

void BM_ThresholdProfile(benchmark::State& state) {
  wvp::DgpConfig cfg;
  cfg.seed = 11;
  const auto data = wvp::derive_standard_variables(wvp::simulate_panel(cfg).data).data;
  wvp::kernels::set_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(wvp::estimate_threshold(data, wvp::ThresholdSpec{}));
  }
}

const int kMaxThreads = wvp::kernels::max_threads();

}  // namespace

BENCHMARK(BM_DemeanReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DemeanParallel)->DenseRange(1, kMaxThreads)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClusterScoresReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClusterScoresParallel)->DenseRange(1, kMaxThreads)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThresholdProfile)->DenseRange(1, kMaxThreads)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
