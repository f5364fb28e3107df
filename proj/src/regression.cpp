#include "wvp/regression.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>

#include "wvp/error.hpp"
#include "wvp/kernels.hpp"

namespace wvp {

namespace {

constexpr double kPivotTolerance = 1e-10;
constexpr double kAbsorbedTolerance = 1e-8;

std::vector<int> dense_codes(std::span<const double> ids, int* n_codes) {
  std::map<double, int> code;
  for (double v : ids) {
    if (is_missing(v)) fail(Errc::MissingClusterId, "cluster id missing on an estimation row");
    code.emplace(v, 0);
  }
  int next = 0;
  for (auto& [v, c] : code) c = next++;
  std::vector<int> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = code[ids[i]];
  *n_codes = next;
  return out;
}

Eigen::MatrixXd expand(const FitResult& fit, const Eigen::MatrixXd& kept_cov) {
  const auto p = static_cast<Eigen::Index>(fit.names.size());
  Eigen::MatrixXd full = Eigen::MatrixXd::Constant(p, p, kMissing);
  for (std::size_t a = 0; a < fit.kept.size(); ++a) {
    for (std::size_t b = 0; b < fit.kept.size(); ++b) {
      full(fit.kept[a], fit.kept[b]) = kept_cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return full;
}

}  // namespace

std::optional<Eigen::Index> FitResult::find(std::string_view name) const {
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == name) return static_cast<Eigen::Index>(j);
  }
  return std::nullopt;
}

Eigen::Index FitResult::index(std::string_view name) const {
  auto j = find(name);
  if (!j) fail(Errc::MissingCoefficient, "no coefficient named '" + std::string(name) + "'");
  return *j;
}

double FitResult::se(std::string_view name) const {
  const auto j = index(name);
  const double v = covariance(j, j);
  return is_missing(v) ? kMissing : std::sqrt(std::max(v, 0.0));
}

double FitResult::residual_df() const {
  return static_cast<double>(n_obs) - static_cast<double>(n_params) - static_cast<double>(absorbed_df);
}

std::vector<double> centered_norms(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    out[static_cast<std::size_t>(j)] = (m.col(j).array() - m.col(j).mean()).matrix().norm();
  }
  return out;
}

Eigen::VectorXd rank_weights(const Eigen::MatrixXd& x, const std::vector<double>& reference_norms) {
  Eigen::VectorXd w(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const double norm = x.col(j).norm();
    const bool absorbed = jj < reference_norms.size() && norm <= kAbsorbedTolerance * reference_norms[jj];
    w(j) = norm == 0.0 || absorbed ? 0.0 : 1.0 / norm;
  }
  return w;
}

FitResult ols_fit(const DesignMatrix& X, const Eigen::VectorXd& y, std::size_t absorbed_df) {
  const auto n = X.values.rows();
  const auto p = X.values.cols();
  if (n == 0 || p == 0) fail(Errc::EmptyDesign, "design matrix is empty");
  if (static_cast<std::size_t>(p) != X.names.size()) fail(Errc::InvalidArgument, "design names/columns mismatch");
  if (y.size() != n) fail(Errc::InvalidArgument, "outcome length differs from design rows");
  if (!X.values.allFinite() || !y.allFinite()) fail(Errc::InvalidArgument, "design or outcome has non-finite entries");

  FitResult fit;
  fit.names = X.names;
  fit.rows = X.rows;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.absorbed_df = absorbed_df;

  // Rank is decided on unit-norm columns so that a regressor's units do not
  // decide whether it is aliased.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(X.values * rank_weights(X.values, X.reference_norms).asDiagonal());
  pivoted.setThreshold(kPivotTolerance);
  const auto rank = pivoted.rank();
  if (rank == 0) fail(Errc::AllColumnsAliased, "every design column is aliased");

  const auto& perm = pivoted.colsPermutation().indices();
  std::vector<Eigen::Index> kept(perm.data(), perm.data() + rank);
  std::sort(kept.begin(), kept.end());
  fit.kept = kept;
  fit.aliased.assign(static_cast<std::size_t>(p), true);
  for (auto j : kept) fit.aliased[static_cast<std::size_t>(j)] = false;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (fit.aliased[static_cast<std::size_t>(j)]) {
      fit.warnings.push_back("column '" + X.names[static_cast<std::size_t>(j)] + "' is aliased and was dropped");
    }
  }

  fit.design.resize(n, rank);
  for (Eigen::Index a = 0; a < rank; ++a) fit.design.col(a) = X.values.col(kept[static_cast<std::size_t>(a)]);

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(fit.design);
  const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(rank, rank).triangularView<Eigen::Upper>();
  const Eigen::VectorXd qty = (qr.householderQ().transpose() * y).head(rank);
  const Eigen::VectorXd beta = R.triangularView<Eigen::Upper>().solve(qty);
  const Eigen::MatrixXd r_inv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(rank, rank));
  fit.bread = r_inv * r_inv.transpose();

  fit.coefficients = Eigen::VectorXd::Constant(p, kMissing);
  for (Eigen::Index a = 0; a < rank; ++a) fit.coefficients(kept[static_cast<std::size_t>(a)]) = beta(a);
  fit.residuals = y - fit.design * beta;
  fit.ssr = fit.residuals.squaredNorm();
  fit.n_params = static_cast<std::size_t>(rank);
  fit.rank = static_cast<std::size_t>(rank);

  const double df = fit.residual_df();
  const double sigma2 = df > 0 ? fit.ssr / df : kMissing;
  fit.covariance = expand(fit, sigma2 * fit.bread);
  fit.covariance_kind = CovarianceKind::Classical;
  return fit;
}

Eigen::MatrixXd cluster_covariance(const FitResult& fit, std::span<const double> cluster_ids,
                                   std::size_t* cluster_count) {
  if (cluster_ids.size() != fit.n_obs) fail(Errc::InvalidArgument, "one cluster id per estimation row required");
  int G = 0;
  const auto codes = dense_codes(cluster_ids, &G);
  if (G < 2) fail(Errc::SingleCluster, "cluster-robust covariance needs at least two clusters");

  const Eigen::MatrixXd scores = kernels::cluster_scores(fit.design, fit.residuals, codes, G);
  const Eigen::MatrixXd meat = scores.transpose() * scores;

  // Entity effects nested in clusters do not count towards K.
  bool nested = fit.entity_df > 0 && fit.entity_codes.size() == codes.size();
  if (nested) {
    std::map<int, int> cluster_of_entity;
    for (std::size_t i = 0; i < codes.size() && nested; ++i) {
      auto [it, inserted] = cluster_of_entity.emplace(fit.entity_codes[i], codes[i]);
      if (!inserted && it->second != codes[i]) nested = false;
    }
  }
  const double N = static_cast<double>(fit.n_obs);
  const double K = static_cast<double>(fit.n_params + fit.absorbed_df - (nested ? fit.entity_df : 0));
  const double g = static_cast<double>(G);
  const double scale = (g / (g - 1.0)) * ((N - 1.0) / (N - K));

  Eigen::MatrixXd v = scale * (fit.bread * meat * fit.bread);
  v = 0.5 * (v + v.transpose());
  if (cluster_count) *cluster_count = static_cast<std::size_t>(G);
  return expand(fit, v);
}

void apply_cluster_covariance(FitResult& fit, std::span<const double> cluster_ids) {
  std::size_t G = 0;
  fit.covariance = cluster_covariance(fit, cluster_ids, &G);
  fit.covariance_kind = CovarianceKind::Cluster;
  fit.cluster_count = G;
}

ParameterEstimate linear_combination(const FitResult& fit, const LinearCombination& terms) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fit.names.size()));
  for (const auto& [name, weight] : terms) w(fit.index(name)) += weight;
  ParameterEstimate out;
  double est = 0.0;
  double var = 0.0;
  for (Eigen::Index a = 0; a < w.size(); ++a) {
    if (w(a) == 0.0) continue;
    if (fit.aliased[static_cast<std::size_t>(a)]) return out;
    est += w(a) * fit.coefficients(a);
    for (Eigen::Index b = 0; b < w.size(); ++b) {
      if (w(b) != 0.0) var += w(a) * fit.covariance(a, b) * w(b);
    }
  }
  out.estimate = est;
  out.se = std::sqrt(std::max(var, 0.0));
  return out;
}

double f_upper_tail(double f, double df1, double df2) {
  if (is_missing(f) || df1 <= 0 || df2 <= 0) return kMissing;
  if (f <= 0.0) return 1.0;
  boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

WaldResult wald_test(const FitResult& fit, const Eigen::MatrixXd& R, const Eigen::VectorXd& r) {
  WaldResult out;
  const auto q = R.rows();
  out.df1 = static_cast<int>(q);
  out.df2 = fit.covariance_kind == CovarianceKind::Cluster ? static_cast<double>(fit.cluster_count) - 1.0
                                                            : fit.residual_df();
  if (q == 0) {
    out.vacuous = true;
    return out;
  }
  if (R.cols() != static_cast<Eigen::Index>(fit.names.size()) || r.size() != q) {
    fail(Errc::InvalidArgument, "restriction matrix does not match the fit");
  }
  if (q > static_cast<Eigen::Index>(fit.rank)) {
    fail(Errc::SingularRestrictionVariance, "more restrictions than retained parameters");
  }
  for (Eigen::Index j = 0; j < R.cols(); ++j) {
    if (fit.aliased[static_cast<std::size_t>(j)] && !R.col(j).isZero(0.0)) {
      fail(Errc::SingularRestrictionVariance, "restriction involves aliased coefficient '" +
                                                  fit.names[static_cast<std::size_t>(j)] + "'");
    }
  }

  const auto& kept = fit.kept;
  Eigen::MatrixXd Rk(q, static_cast<Eigen::Index>(kept.size()));
  Eigen::VectorXd bk(static_cast<Eigen::Index>(kept.size()));
  Eigen::MatrixXd Vk(Rk.cols(), Rk.cols());
  for (std::size_t a = 0; a < kept.size(); ++a) {
    Rk.col(static_cast<Eigen::Index>(a)) = R.col(kept[a]);
    bk(static_cast<Eigen::Index>(a)) = fit.coefficients(kept[a]);
    for (std::size_t b = 0; b < kept.size(); ++b) {
      Vk(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = fit.covariance(kept[a], kept[b]);
    }
  }
  const Eigen::VectorXd diff = Rk * bk - r;
  const Eigen::MatrixXd middle = Rk * Vk * Rk.transpose();
  if (middle.cwiseAbs().maxCoeff() == 0.0) {
    out.zero_variance = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(middle);
  const auto& ev = eig.eigenvalues();
  if (ev.minCoeff() <= 1e-12 * ev.cwiseAbs().maxCoeff()) {
    fail(Errc::SingularRestrictionVariance, "restriction variance matrix is singular");
  }
  const Eigen::VectorXd z = eig.eigenvectors().transpose() * diff;
  out.f = z.cwiseProduct(ev.cwiseInverse()).dot(z) / static_cast<double>(q);
  out.p_value = f_upper_tail(out.f, static_cast<double>(q), out.df2);
  return out;
}

WaldResult wald_test(const FitResult& fit, const std::vector<LinearRestriction>& restrictions) {
  const auto q = static_cast<Eigen::Index>(restrictions.size());
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(q, static_cast<Eigen::Index>(fit.names.size()));
  Eigen::VectorXd r(q);
  for (Eigen::Index i = 0; i < q; ++i) {
    for (const auto& [name, w] : restrictions[static_cast<std::size_t>(i)].terms) R(i, fit.index(name)) += w;
    r(i) = restrictions[static_cast<std::size_t>(i)].value;
  }
  return wald_test(fit, R, r);
}

WaldResult wald_test_zero(const FitResult& fit, const std::vector<std::string>& names) {
  std::vector<LinearRestriction> rs;
  for (const auto& n : names) rs.push_back({{{n, 1.0}}, 0.0});
  return wald_test(fit, rs);
}

// ---------------------------------------------------------------------------

std::pair<std::size_t, std::size_t> fixed_effect_df(const kernels::Groups& groups, const FixedEffectsSpec& fe) {
  const auto E = static_cast<std::size_t>(groups.n_entities);
  const auto T = static_cast<std::size_t>(groups.n_periods);
  if (fe.entity_effects && fe.time_effects) {
    // connected components of the entity-period bipartite graph
    std::vector<int> parent(E + T);
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const int a = root(groups.entity[i]);
      const int b = root(static_cast<int>(E) + groups.period[i]);
      if (a != b) parent[a] = b;
    }
    std::size_t components = 0;
    for (std::size_t x = 0; x < E + T; ++x) components += (root(static_cast<int>(x)) == static_cast<int>(x));
    return {E + T - components, E};
  }
  if (fe.entity_effects) return {E, E};
  if (fe.time_effects) return {T, 0};
  return {0, 0};
}

std::vector<std::size_t> model_sample(const PanelDataset& d, const PanelModel& model) {
  std::vector<std::span<const double>> cols{d.column(model.outcome)};
  for (const auto& r : model.regressors) {
    if (r.values.size() != d.n_rows()) fail(Errc::InvalidArgument, "regressor '" + r.name + "' has wrong length");
    cols.emplace_back(r.values);
  }
  for (const auto& c : model.controls) cols.push_back(d.column(c));
  if (model.cluster && !model.cluster_var.empty()) cols.push_back(d.column(model.cluster_var));
  return complete_cases(cols, d.n_rows());
}

FitResult fit_panel_model(const PanelDataset& d, const PanelModel& model) {
  const auto rows = model_sample(d, model);
  if (rows.empty()) fail(Errc::EmptySample, "no complete cases for the model");

  std::vector<std::string> names;
  std::vector<std::span<const double>> cols;
  for (const auto& r : model.regressors) {
    names.push_back(r.name);
    cols.emplace_back(r.values);
  }
  for (const auto& c : model.controls) {
    names.push_back(c);
    cols.push_back(d.column(c));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd m(n, k + 1);
  const auto y = d.column(model.outcome);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = rows[static_cast<std::size_t>(i)];
    m(i, 0) = y[row];
    for (Eigen::Index j = 0; j < k; ++j) m(i, j + 1) = cols[static_cast<std::size_t>(j)][row];
  }

  const auto groups = make_groups(d, rows);
  std::size_t absorbed = 0, entity_df = 0;
  std::vector<double> reference;
  if (model.fe.any()) {
    reference = centered_norms(m.rightCols(k));
    within_transform_matrix(m, groups, model.fe);
    std::tie(absorbed, entity_df) = fixed_effect_df(groups, model.fe);
  }

  DesignMatrix X;
  X.rows = rows;
  X.names = names;
  if (model.fe.any()) {
    X.values = m.rightCols(k);
    X.reference_norms = std::move(reference);
  } else {
    X.names.emplace_back("const");
    X.values.resize(n, k + 1);
    X.values.leftCols(k) = m.rightCols(k);
    X.values.col(k).setOnes();
  }
  if (X.values.cols() == 0) fail(Errc::EmptyDesign, "model has no regressors");

  FitResult fit = ols_fit(X, m.col(0), absorbed);
  fit.entity_df = entity_df;
  if (model.fe.entity_effects) fit.entity_codes = groups.entity;

  if (model.cluster) {
    std::vector<double> ids(rows.size());
    if (model.cluster_var.empty()) {
      for (std::size_t i = 0; i < rows.size(); ++i) ids[i] = static_cast<double>(d.entity_index()[rows[i]]);
    } else {
      const auto c = d.column(model.cluster_var);
      for (std::size_t i = 0; i < rows.size(); ++i) ids[i] = c[rows[i]];
    }
    apply_cluster_covariance(fit, ids);
  }
  return fit;
}

Residualized fwl_residualize(const PanelDataset& d, const std::vector<std::string>& targets,
                             const std::vector<std::string>& controls, const FixedEffectsSpec& fe) {
  std::vector<std::span<const double>> cols;
  for (const auto& t : targets) cols.push_back(d.column(t));
  for (const auto& c : controls) cols.push_back(d.column(c));
  Residualized out;
  out.names = targets;
  out.rows = complete_cases(cols, d.n_rows());
  if (out.rows.empty()) fail(Errc::EmptySample, "no complete cases for residualization");

  const auto n = static_cast<Eigen::Index>(out.rows.size());
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) m(i, static_cast<Eigen::Index>(c)) = cols[c][out.rows[static_cast<std::size_t>(i)]];
  }
  const auto nt = static_cast<Eigen::Index>(targets.size());
  const auto nc = static_cast<Eigen::Index>(controls.size());
  std::vector<double> reference;
  if (fe.any()) {
    reference = centered_norms(m.rightCols(nc));
    within_transform_matrix(m, make_groups(d, out.rows), fe);
  }

  out.values = m.leftCols(nt);
  if (!controls.empty()) {
    const Eigen::MatrixXd C = m.rightCols(nc) * rank_weights(m.rightCols(nc), reference).asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C);
    qr.setThreshold(kPivotTolerance);
    if (qr.rank() > 0) {
      for (Eigen::Index t = 0; t < nt; ++t) {
        const Eigen::VectorXd b = qr.solve(out.values.col(t));
        out.values.col(t) -= C * b;
      }
    }
  }
  return out;
}

}  // namespace wvp
