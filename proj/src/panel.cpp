#include "wvp/panel.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "wvp/csv.hpp"
#include "wvp/error.hpp"

namespace wvp {

// ---------------------------------------------------------------------------
// PanelDataset

PanelDataset PanelDataset::from_rows(const std::vector<std::string>& entity, const std::vector<int>& year,
                                     std::map<std::string, std::vector<double>> variables,
                                     const std::string& lineage) {
  const std::size_t n = entity.size();
  if (year.size() != n) fail(Errc::InvalidArgument, "entity and year lengths differ");
  for (const auto& [name, v] : variables) {
    if (v.size() != n) fail(Errc::InvalidArgument, "column '" + name + "' has wrong length");
  }

  PanelDataset d;
  std::unordered_map<std::string, std::size_t> code;
  std::vector<std::size_t> row_entity(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = code.try_emplace(entity[i], d.entities_.size());
    if (inserted) d.entities_.push_back(entity[i]);
    row_entity[i] = it->second;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row_entity[a] != row_entity[b]) return row_entity[a] < row_entity[b];
    return year[a] < year[b];
  });
  for (std::size_t p = 1; p < n; ++p) {
    const auto a = order[p - 1], b = order[p];
    if (row_entity[a] == row_entity[b] && year[a] == year[b]) {
      fail(Errc::DuplicateKey, "duplicate (entity, year) = (" + entity[b] + ", " + std::to_string(year[b]) + ")");
    }
  }

  d.entity_of_row_.resize(n);
  d.year_.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    d.entity_of_row_[p] = row_entity[order[p]];
    d.year_[p] = year[order[p]];
  }
  for (auto& [name, v] : variables) {
    auto col = std::make_shared<Column>();
    col->values.resize(n);
    for (std::size_t p = 0; p < n; ++p) col->values[p] = v[order[p]];
    col->lineage = lineage;
    d.columns_.emplace(name, std::move(col));
  }
  d.index_entities();
  return d;
}

void PanelDataset::index_entities() {
  entity_start_.assign(entities_.size() + 1, 0);
  for (auto e : entity_of_row_) ++entity_start_[e + 1];
  for (std::size_t e = 0; e < entities_.size(); ++e) entity_start_[e + 1] += entity_start_[e];
  gaps_ = 0;
  for (std::size_t e = 0; e < entities_.size(); ++e) {
    for (auto r = entity_start_[e] + 1; r < entity_start_[e + 1]; ++r) {
      gaps_ += static_cast<std::size_t>(year_[r] - year_[r - 1] - 1);
    }
  }
}

std::span<const double> PanelDataset::column(std::string_view name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) fail(Errc::UnknownVariable, "unknown variable '" + std::string(name) + "'");
  return it->second->values;
}

const std::string& PanelDataset::lineage(std::string_view name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) fail(Errc::UnknownVariable, "unknown variable '" + std::string(name) + "'");
  return it->second->lineage;
}

std::vector<std::string> PanelDataset::variable_names() const {
  std::vector<std::string> names;
  for (const auto& [name, col] : columns_) names.push_back(name);
  return names;
}

PanelDataset PanelDataset::with_column(const std::string& name, std::vector<double> values,
                                       const std::string& lineage) const {
  if (values.size() != n_rows()) fail(Errc::InvalidArgument, "column '" + name + "' has wrong length");
  PanelDataset d = *this;
  d.columns_[name] = std::make_shared<Column>(Column{std::move(values), lineage});
  return d;
}

PanelDataset PanelDataset::filter_rows(const std::vector<bool>& keep) const {
  if (keep.size() != n_rows()) fail(Errc::InvalidArgument, "filter mask has wrong length");
  PanelDataset d;
  std::vector<std::size_t> remap(entities_.size(), SIZE_MAX);
  for (std::size_t r = 0; r < n_rows(); ++r) {
    if (!keep[r]) continue;
    auto& code = remap[entity_of_row_[r]];
    if (code == SIZE_MAX) {
      code = d.entities_.size();
      d.entities_.push_back(entities_[entity_of_row_[r]]);
    }
    d.entity_of_row_.push_back(code);
    d.year_.push_back(year_[r]);
  }
  for (const auto& [name, col] : columns_) {
    auto out = std::make_shared<Column>();
    out->lineage = col->lineage;
    for (std::size_t r = 0; r < n_rows(); ++r) {
      if (keep[r]) out->values.push_back(col->values[r]);
    }
    d.columns_.emplace(name, std::move(out));
  }
  d.index_entities();
  return d;
}

// ---------------------------------------------------------------------------
// I/O

PanelDataset load_panel(std::istream& in, const Schema& schema) {
  const auto table = csv::read(in);
  if (table.rows.empty()) fail(Errc::EmptyInput, "input has a header but no data rows");

  auto find = [&](const std::string& header) -> std::size_t {
    auto it = std::find(table.header.begin(), table.header.end(), header);
    if (it == table.header.end()) fail(Errc::MissingColumn, "missing column '" + header + "'");
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const auto entity_pos = find(schema.entity);
  const auto year_pos = find(schema.year);

  std::vector<std::pair<std::string, std::size_t>> vars;
  if (schema.variables.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c != entity_pos && c != year_pos) vars.emplace_back(table.header[c], c);
    }
  } else {
    for (const auto& [name, header] : schema.variables) vars.emplace_back(name, find(header));
  }
  if (vars.empty()) fail(Errc::MissingColumn, "no variable columns besides entity and year");

  const std::size_t n = table.rows.size();
  std::vector<std::string> entity(n);
  std::vector<int> year(n);
  std::map<std::string, std::vector<double>> values;
  for (const auto& v : vars) values[v.first].resize(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    entity[r] = row[entity_pos];
    if (entity[r].empty()) fail(Errc::ParseError, "empty entity id on data row " + std::to_string(r + 1));
    auto y = csv::parse_number(row[year_pos], nullptr);
    if (!y || *y != std::floor(*y)) {
      fail(Errc::ParseError, "unparseable year '" + row[year_pos] + "' on data row " + std::to_string(r + 1));
    }
    year[r] = static_cast<int>(*y);
    for (const auto& [name, pos] : vars) {
      auto v = csv::parse_number(row[pos], nullptr);
      values[name][r] = v ? *v : kMissing;
    }
  }
  return PanelDataset::from_rows(entity, year, std::move(values), "load_panel");
}

PanelDataset load_panel_file(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open '" + path + "'");
  return load_panel(in, schema);
}

void write_panel(std::ostream& out, const PanelDataset& d, const std::vector<std::string>& variables) {
  std::vector<std::string> header{std::string(columns::kEntity), std::string(columns::kYear)};
  header.insert(header.end(), variables.begin(), variables.end());
  csv::write_row(out, header);
  std::vector<std::span<const double>> cols;
  for (const auto& v : variables) cols.push_back(d.column(v));
  std::vector<std::string> fields(header.size());
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    fields[0] = d.entity_ids()[d.entity_index()[r]];
    fields[1] = std::to_string(d.years()[r]);
    for (std::size_t c = 0; c < cols.size(); ++c) fields[c + 2] = csv::format_number(cols[c][r]);
    csv::write_row(out, fields);
  }
}

// ---------------------------------------------------------------------------
// Derived variables

PanelDataset derive_vote_share(const PanelDataset& d, std::string_view nonagr_col, std::string_view land_col,
                               const std::string& out) {
  const auto vn = d.column(nonagr_col);
  const auto vl = d.column(land_col);
  std::vector<double> share(d.n_rows(), kMissing);
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    if (is_missing(vn[r]) || is_missing(vl[r])) continue;
    if (vn[r] < 0.0 || vl[r] < 0.0) {
      fail(Errc::NegativeVotes, "negative votes for entity " + d.entity_ids()[d.entity_index()[r]] + " in " +
                                    std::to_string(d.years()[r]));
    }
    const double total = vn[r] + vl[r];
    if (total > 0.0) share[r] = vn[r] / total;
  }
  return d.with_column(out, std::move(share), "derive_vote_share");
}

LogPerCapitaResult derive_log_per_capita(const PanelDataset& d, std::string_view spend_col,
                                         std::string_view pop_col, std::optional<std::string_view> deflator_col,
                                         const std::string& out) {
  const auto spend = d.column(spend_col);
  const auto pop = d.column(pop_col);
  std::span<const double> deflator;
  if (deflator_col) deflator = d.column(*deflator_col);

  LogPerCapitaResult result;
  std::vector<double> y(d.n_rows(), kMissing);
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    const double defl = deflator.empty() ? 1.0 : deflator[r];
    if (is_missing(spend[r]) || is_missing(pop[r]) || is_missing(defl)) continue;
    if (spend[r] <= 0.0 || pop[r] <= 0.0 || defl <= 0.0) {
      ++result.non_positive;
      result.non_positive_cells.push_back({d.entity_ids()[d.entity_index()[r]], d.years()[r]});
      continue;
    }
    y[r] = std::log(spend[r] / defl / pop[r]);
  }
  result.data = d.with_column(out, std::move(y), "derive_log_per_capita");
  return result;
}

PanelDataset derive_inverse_sum(const PanelDataset& d, std::string_view a, std::string_view b,
                                const std::string& out) {
  const auto x = d.column(a);
  const auto z = d.column(b);
  std::vector<double> inv(d.n_rows(), kMissing);
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    const double s = x[r] + z[r];
    if (!is_missing(s) && s != 0.0) inv[r] = 1.0 / s;
  }
  return d.with_column(out, std::move(inv), "derive_inverse_sum");
}

PanelDataset derive_log(const PanelDataset& d, std::string_view col, const std::string& out) {
  const auto x = d.column(col);
  std::vector<double> v(d.n_rows(), kMissing);
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    if (!is_missing(x[r]) && x[r] > 0.0) v[r] = std::log(x[r]);
  }
  return d.with_column(out, std::move(v), "derive_log");
}

StandardVariables derive_standard_variables(const PanelDataset& d) {
  using namespace columns;
  auto data = derive_vote_share(d, kVotesNonagr, kVotesLand, std::string(kShare));
  std::optional<std::string_view> deflator;
  if (d.has(kDeflator)) deflator = kDeflator;
  auto lp = derive_log_per_capita(data, kSchoolSpend, kPopulation, deflator, std::string(kOutcome));
  data = derive_inverse_sum(lp.data, kVotesNonagr, kVotesLand, std::string(kInvVotes));
  data = derive_log(data, kPopulation, std::string(kLogPop));
  return {std::move(data), lp.non_positive};
}

std::string lag_name(std::string_view var, int k) {
  return k == 0 ? std::string(var) : std::string(var) + ".lag" + std::to_string(k);
}

std::string lead_name(std::string_view var, int k) {
  return k == 0 ? std::string(var) : std::string(var) + ".lead" + std::to_string(k);
}

PanelDataset build_lags_leads(const PanelDataset& d, std::string_view var, int n_leads, int n_lags) {
  if (n_leads < 0 || n_lags < 0) fail(Errc::InvalidArgument, "lead/lag counts must be non-negative");
  const auto x = d.column(var);
  const auto years = d.years();

  // shift > 0 looks back (lag), shift < 0 looks forward (lead)
  auto shifted = [&](int shift) {
    std::vector<double> out(d.n_rows(), kMissing);
    for (std::size_t e = 0; e < d.n_entities(); ++e) {
      const auto begin = d.entity_begin(e), end = d.entity_begin(e + 1);
      for (auto r = begin; r < end; ++r) {
        const int target = years[r] - shift;
        auto first = years.begin() + static_cast<std::ptrdiff_t>(begin);
        auto last = years.begin() + static_cast<std::ptrdiff_t>(end);
        auto it = std::lower_bound(first, last, target);
        if (it != last && *it == target) out[r] = x[static_cast<std::size_t>(it - years.begin())];
      }
    }
    return out;
  };

  PanelDataset out = d;
  for (int k = 1; k <= n_lags; ++k) out = out.with_column(lag_name(var, k), shifted(k), "build_lags_leads");
  for (int k = 1; k <= n_leads; ++k) out = out.with_column(lead_name(var, k), shifted(-k), "build_lags_leads");
  return out;
}

// ---------------------------------------------------------------------------
// Within transformation

std::vector<std::size_t> complete_cases(std::span<const std::span<const double>> cols, std::size_t n_rows) {
  std::vector<std::size_t> rows;
  rows.reserve(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    bool ok = true;
    for (const auto& c : cols) {
      if (is_missing(c[r])) {
        ok = false;
        break;
      }
    }
    if (ok) rows.push_back(r);
  }
  return rows;
}

kernels::Groups make_groups(const PanelDataset& d, std::span<const std::size_t> rows) {
  kernels::Groups g;
  g.entity.resize(rows.size());
  g.period.resize(rows.size());
  std::unordered_map<std::size_t, int> ecode;
  std::map<int, int> pcode;
  for (auto r : rows) pcode.emplace(d.years()[r], 0);
  int next = 0;
  for (auto& [year, code] : pcode) code = next++;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto [it, inserted] = ecode.try_emplace(d.entity_index()[rows[i]], static_cast<int>(ecode.size()));
    g.entity[i] = it->second;
    g.period[i] = pcode[d.years()[rows[i]]];
  }
  g.n_entities = static_cast<int>(ecode.size());
  g.n_periods = next;
  return g;
}

int within_transform_matrix(Eigen::Ref<Eigen::MatrixXd> m, const kernels::Groups& groups,
                            const FixedEffectsSpec& fe) {
  if (!fe.any()) return 0;
  kernels::DemeanOptions opts;
  opts.entity = fe.entity_effects;
  opts.time = fe.time_effects;
  const auto stats = kernels::demean(m, groups, opts);
  if (!stats.converged) {
    fail(Errc::NoConvergence, "alternating demeaning did not converge in " + std::to_string(opts.max_iterations) +
                                  " iterations");
  }
  return stats.iterations;
}

WithinResult within_transform(const PanelDataset& d, const std::vector<std::string>& vars,
                              const FixedEffectsSpec& fe) {
  if (!fe.any()) fail(Errc::InvalidArgument, "within transform needs at least one fixed-effect dimension");
  std::vector<std::span<const double>> cols;
  for (const auto& v : vars) cols.push_back(d.column(v));

  WithinResult out;
  out.names = vars;
  out.rows = complete_cases(cols, d.n_rows());
  if (out.rows.empty()) fail(Errc::EmptySample, "no complete cases for the requested variables");

  out.values.resize(static_cast<Eigen::Index>(out.rows.size()), static_cast<Eigen::Index>(vars.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = cols[c][out.rows[i]];
    }
  }
  const auto groups = make_groups(d, out.rows);
  out.iterations = within_transform_matrix(out.values, groups, fe);
  return out;
}

}  // namespace wvp
