#include "wvp/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "wvp/error.hpp"
#include "wvp/random.hpp"

namespace wvp {

std::vector<std::string> default_controls() {
  return {std::string(columns::kVotesNonagr), std::string(columns::kInvVotes), std::string(columns::kLogPop)};
}

std::string kink_name(std::string_view share) { return std::string(share) + ".kink"; }
std::string jump_name(std::string_view share) { return std::string(share) + ".jump"; }

std::vector<Regressor> threshold_regressors(std::span<const double> share, std::string_view name, double gamma,
                                            bool include_jump) {
  const auto n = share.size();
  std::vector<Regressor> out;
  out.push_back({std::string(name), std::vector<double>(share.begin(), share.end())});
  Regressor kink{kink_name(name), std::vector<double>(n, kMissing)};
  Regressor jump{jump_name(name), std::vector<double>(n, kMissing)};
  for (std::size_t r = 0; r < n; ++r) {
    const double s = share[r];
    if (is_missing(s)) continue;
    const bool above = s > gamma;
    kink.values[r] = above ? s - gamma : 0.0;
    jump.values[r] = above ? 1.0 : 0.0;
  }
  out.push_back(std::move(kink));
  if (include_jump) out.push_back(std::move(jump));
  return out;
}

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) fail(Errc::InvalidArgument, "threshold must lie in (0, 1)");
}

void check_share_range(std::span<const double> share) {
  for (double s : share) {
    if (!is_missing(s) && (s < 0.0 || s > 1.0)) fail(Errc::InvalidArgument, "share variable outside [0, 1]");
  }
}

PanelModel base_model(const ThresholdSpec& spec, std::vector<Regressor> regressors) {
  PanelModel m;
  m.outcome = spec.outcome;
  m.regressors = std::move(regressors);
  m.controls = spec.controls;
  m.fe = spec.fe;
  m.cluster = true;
  m.cluster_var = spec.cluster_var;
  return m;
}

// Everything the grid search needs that does not depend on gamma: the
// estimation sample, the outcome residualized on the linear (null) model, and
// an orthonormal basis of the within-transformed linear design.
struct ProfileSetup {
  std::vector<std::size_t> rows;
  kernels::Groups groups;
  Eigen::VectorXd share;
  Eigen::VectorXd y_resid;
  Eigen::MatrixXd base_basis;
  std::size_t base_rank = 0;
  std::size_t absorbed_df = 0;
  std::vector<int> cluster;
  int n_clusters = 0;
  FixedEffectsSpec fe;
};

ProfileSetup prepare_profile(const PanelDataset& d, const ThresholdSpec& spec) {
  const auto share_col = d.column(spec.share);
  check_share_range(share_col);
  PanelModel model = base_model(spec, {{spec.share, std::vector<double>(share_col.begin(), share_col.end())}});

  ProfileSetup s;
  s.fe = spec.fe;
  s.rows = model_sample(d, model);
  if (s.rows.empty()) fail(Errc::EmptySample, "no complete cases for the threshold model");
  s.groups = make_groups(d, s.rows);
  const auto n = static_cast<Eigen::Index>(s.rows.size());

  std::vector<std::span<const double>> cols{d.column(spec.outcome), share_col};
  for (const auto& c : spec.controls) cols.push_back(d.column(c));
  const auto k = static_cast<Eigen::Index>(cols.size()) - 1 + (spec.fe.any() ? 0 : 1);
  Eigen::MatrixXd m(n, k + 1);
  s.share.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = s.rows[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < cols.size(); ++c) m(i, static_cast<Eigen::Index>(c)) = cols[c][r];
    if (!spec.fe.any()) m(i, k) = 1.0;
    s.share(i) = share_col[r];
  }
  std::vector<double> reference;
  if (spec.fe.any()) {
    reference = centered_norms(m.rightCols(k));
    within_transform_matrix(m, s.groups, spec.fe);
    s.absorbed_df = fixed_effect_df(s.groups, spec.fe).first;
  }

  const Eigen::MatrixXd B = m.rightCols(k) * rank_weights(m.rightCols(k), reference).asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  s.base_rank = static_cast<std::size_t>(rank);
  s.base_basis = qr.householderQ() * Eigen::MatrixXd::Identity(n, rank);
  s.y_resid = m.col(0) - s.base_basis * (s.base_basis.transpose() * m.col(0));

  std::vector<double> ids(s.rows.size());
  const auto cvar = spec.cluster_var.empty() ? std::span<const double>{} : d.column(spec.cluster_var);
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    ids[i] = cvar.empty() ? static_cast<double>(d.entity_index()[s.rows[i]]) : cvar[s.rows[i]];
  }
  std::map<double, int> code;
  for (double v : ids) code.emplace(v, 0);
  for (auto& [v, c] : code) c = s.n_clusters++;
  s.cluster.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) s.cluster[i] = code[ids[i]];
  return s;
}

// Threshold terms for one candidate, residualized on fixed effects and the
// linear design, columns weighted for rank decisions (only their span is
// used). Runs single-threaded: callers parallelize over candidates.
Eigen::MatrixXd residualized_terms(const ProfileSetup& s, double gamma, bool include_jump) {
  const auto n = s.share.size();
  Eigen::MatrixXd Z(n, include_jump ? 2 : 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool above = s.share(i) > gamma;
    Z(i, 0) = above ? s.share(i) - gamma : 0.0;
    if (include_jump) Z(i, 1) = above ? 1.0 : 0.0;
  }
  const auto reference = centered_norms(Z);
  if (s.fe.any()) {
    kernels::DemeanOptions opts;
    opts.entity = s.fe.entity_effects;
    opts.time = s.fe.time_effects;
    const auto stats = kernels::demean(Z, s.groups, opts);
    if (!stats.converged) fail(Errc::NoConvergence, "demeaning of threshold terms did not converge");
  }
  Z -= s.base_basis * (s.base_basis.transpose() * Z);
  return Z * rank_weights(Z, reference).asDiagonal();
}

double candidate_ssr(const ProfileSetup& s, double gamma, bool include_jump) {
  const Eigen::MatrixXd Z = residualized_terms(s, gamma, include_jump);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  qr.setThreshold(1e-10);
  if (qr.rank() == 0) return s.y_resid.squaredNorm();
  const Eigen::VectorXd c = qr.solve(s.y_resid);
  return (s.y_resid - Z * c).squaredNorm();
}

}  // namespace

ThresholdFit fit_threshold(const PanelDataset& d, const ThresholdSpec& spec) {
  check_gamma(spec.gamma);
  const auto share = d.column(spec.share);
  check_share_range(share);
  const auto model = base_model(spec, threshold_regressors(share, spec.share, spec.gamma, spec.include_jump));

  const auto rows = model_sample(d, model);
  std::set<std::size_t> below, above;
  for (auto r : rows) {
    const double id = spec.cluster_var.empty() ? static_cast<double>(d.entity_index()[r]) : d.column(spec.cluster_var)[r];
    (share[r] > spec.gamma ? above : below).insert(static_cast<std::size_t>(id));
  }
  if (below.size() < 2 || above.size() < 2) {
    fail(Errc::EmptyRegime, "each regime needs observations from at least two clusters");
  }

  ThresholdFit tf;
  tf.gamma = spec.gamma;
  tf.include_jump = spec.include_jump;
  tf.fit = fit_panel_model(d, model);
  tf.ssr = tf.fit.ssr;
  const auto kn = kink_name(spec.share);
  tf.beta_L = linear_combination(tf.fit, {{spec.share, 1.0}});
  tf.beta_N = linear_combination(tf.fit, {{spec.share, 1.0}, {kn, 1.0}});
  if (spec.include_jump) tf.delta = linear_combination(tf.fit, {{jump_name(spec.share), 1.0}});
  return tf;
}

std::vector<double> threshold_grid(std::vector<double> shares, double trim, double step) {
  if (!(trim > 0.0 && trim < 0.5)) fail(Errc::InvalidArgument, "trim must lie in (0, 0.5)");
  if (!(step > 0.0)) fail(Errc::InvalidArgument, "grid step must be positive");
  std::erase_if(shares, [](double s) { return is_missing(s); });
  if (shares.empty()) fail(Errc::DegenerateGrid, "no share values");
  std::sort(shares.begin(), shares.end());
  const auto n = shares.size();
  const auto count = static_cast<long>(std::floor((1.0 - 2.0 * trim) / step + 1e-9));
  std::vector<double> grid;
  for (long i = 0; i <= count; ++i) {
    const double p = trim + static_cast<double>(i) * step;
    const auto idx = static_cast<std::size_t>(std::floor(p * static_cast<double>(n - 1) + 1e-9));
    const double g = shares[std::min(idx, n - 1)];
    if (g > 0.0 && g < 1.0 && (grid.empty() || g != grid.back())) grid.push_back(g);
  }
  return grid;
}

ThresholdSearch estimate_threshold(const PanelDataset& d, const ThresholdSpec& spec, double trim, double step) {
  const auto setup = prepare_profile(d, spec);
  const auto grid = threshold_grid(std::vector<double>(setup.share.data(), setup.share.data() + setup.share.size()),
                                   trim, step);
  if (grid.size() < 10) {
    fail(Errc::DegenerateGrid, "trimmed grid has " + std::to_string(grid.size()) + " candidates; need at least 10");
  }

  ThresholdSearch out;
  out.trim = trim;
  out.grid_step = step;
  out.n_obs = setup.rows.size();
  out.n_params = setup.base_rank + (spec.include_jump ? 2 : 1) + setup.absorbed_df;
  out.profile.resize(grid.size());
  const auto m = static_cast<long>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < m; ++i) {
    out.profile[static_cast<std::size_t>(i)] = {grid[static_cast<std::size_t>(i)],
                                                candidate_ssr(setup, grid[static_cast<std::size_t>(i)], spec.include_jump)};
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < out.profile.size(); ++i) {
    const auto& p = out.profile[i];
    const auto& b = out.profile[best];
    if (p.ssr < b.ssr || (p.ssr == b.ssr && std::abs(p.gamma - 0.5) < std::abs(b.gamma - 0.5))) best = i;
  }
  out.gamma = out.profile[best].gamma;
  out.ssr = out.profile[best].ssr;
  for (const auto& p : out.profile) {
    if (p.ssr < out.ssr) fail(Errc::InvalidArgument, "internal: profile minimum violated");
  }
  return out;
}

double lr_critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  return -2.0 * std::log(1.0 - std::sqrt(1.0 - alpha));
}

ThresholdInterval threshold_confidence_interval(const std::vector<ProfilePoint>& profile, std::size_t n,
                                                double alpha) {
  if (profile.empty()) fail(Errc::EmptyProfile, "empty SSR profile");
  ThresholdInterval out;
  out.critical_value = lr_critical_value(alpha);
  const auto best = std::min_element(profile.begin(), profile.end(),
                                     [](const ProfilePoint& a, const ProfilePoint& b) { return a.ssr < b.ssr; });
  const double ssr_min = best->ssr;
  out.lower = out.upper = best->gamma;
  for (const auto& p : profile) {
    double lr;
    if (ssr_min > 0.0) {
      lr = static_cast<double>(n) * (p.ssr - ssr_min) / ssr_min;
    } else {
      lr = p.ssr > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (lr <= out.critical_value) {
      ++out.accepted;
      out.lower = std::min(out.lower, p.gamma);
      out.upper = std::max(out.upper, p.gamma);
    }
  }
  return out;
}

WaldResult regime_difference_test(const ThresholdFit& tf) {
  if (!tf.include_jump) fail(Errc::InvalidArgument, "regime difference test needs a fit with the jump term");
  const auto& share = tf.fit.names.front();
  return wald_test_zero(tf.fit, {kink_name(share), jump_name(share)});
}

LinearityTest bootstrap_linearity_test(const PanelDataset& d, const ThresholdSpec& spec, double trim, int B,
                                       std::uint64_t seed, double step) {
  if (B < 99) fail(Errc::InvalidArgument, "bootstrap needs at least 99 replications");
  const auto setup = prepare_profile(d, spec);
  const auto grid = threshold_grid(std::vector<double>(setup.share.data(), setup.share.data() + setup.share.size()),
                                   trim, step);
  if (grid.size() < 10) fail(Errc::DegenerateGrid, "trimmed grid has fewer than 10 candidates");

  const auto n = setup.share.size();
  const auto m = static_cast<long>(grid.size());
  const double q = spec.include_jump ? 2.0 : 1.0;

  // Orthonormal basis of the residualized threshold terms for each candidate.
  std::vector<Eigen::MatrixXd> bases(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < m; ++i) {
    const Eigen::MatrixXd Z = residualized_terms(setup, grid[static_cast<std::size_t>(i)], spec.include_jump);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    qr.setThreshold(1e-10);
    bases[static_cast<std::size_t>(i)] = qr.householderQ() * Eigen::MatrixXd::Identity(n, qr.rank());
  }

  auto sup_f = [&](const Eigen::VectorXd& e, double* arg) {
    const double ssr0 = e.squaredNorm();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < bases.size(); ++i) {
      const double gain = (bases[i].transpose() * e).squaredNorm();
      const double ssr1 = ssr0 - gain;
      const double df = static_cast<double>(n) - static_cast<double>(setup.base_rank + setup.absorbed_df) -
                        static_cast<double>(bases[i].cols());
      const double f = ssr1 > 0.0 ? (gain / q) / (ssr1 / df) : std::numeric_limits<double>::infinity();
      if (f > best) {
        best = f;
        if (arg) *arg = grid[i];
      }
    }
    return best;
  };

  LinearityTest out;
  out.replications = B;
  out.sup_f = sup_f(setup.y_resid, &out.gamma_at_sup);
  out.bootstrap_sup_f.resize(static_cast<std::size_t>(B));

#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < B; ++b) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(b));
    std::vector<double> sign(static_cast<std::size_t>(setup.n_clusters));
    for (auto& s : sign) s = (rng() >> 63) ? 1.0 : -1.0;
    Eigen::MatrixXd e(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) e(i, 0) = sign[static_cast<std::size_t>(setup.cluster[static_cast<std::size_t>(i)])] * setup.y_resid(i);
    if (setup.fe.any()) {
      kernels::DemeanOptions opts;
      opts.entity = setup.fe.entity_effects;
      opts.time = setup.fe.time_effects;
      kernels::demean(e, setup.groups, opts);
    }
    Eigen::VectorXd v = e.col(0);
    v -= setup.base_basis * (setup.base_basis.transpose() * v);
    out.bootstrap_sup_f[static_cast<std::size_t>(b)] = sup_f(v, nullptr);
  }

  const auto exceed = std::count_if(out.bootstrap_sup_f.begin(), out.bootstrap_sup_f.end(),
                                    [&](double f) { return f >= out.sup_f; });
  out.p_value = static_cast<double>(exceed) / static_cast<double>(B);
  return out;
}

}  // namespace wvp
