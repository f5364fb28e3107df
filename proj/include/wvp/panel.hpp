#pragma once

#include <cmath>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wvp/kernels.hpp"

namespace wvp {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Canonical column names used by the simulator output and the CLI.
namespace columns {
inline constexpr std::string_view kEntity = "entity_id";
inline constexpr std::string_view kYear = "year";
inline constexpr std::string_view kSchoolSpend = "school_spend";
inline constexpr std::string_view kPopulation = "population";
inline constexpr std::string_view kVotesNonagr = "votes_nonagr";
inline constexpr std::string_view kVotesLand = "votes_land";
inline constexpr std::string_view kDeflator = "deflator";
inline constexpr std::string_view kHighLandConc = "high_land_conc";
// derived
inline constexpr std::string_view kShare = "share";
inline constexpr std::string_view kOutcome = "y";
inline constexpr std::string_view kInvVotes = "inv_votes";
inline constexpr std::string_view kLogPop = "log_pop";
}  // namespace columns

struct Column {
  std::vector<double> values;  // NaN marks a missing cell
  std::string lineage;         // operation that created the column
};

struct FixedEffectsSpec {
  bool entity_effects = true;
  bool time_effects = true;

  bool any() const { return entity_effects || time_effects; }
};

/// Entity x year observations, sorted by entity (first-appearance order) and
/// then year. Immutable: every derivation returns a new dataset that shares
/// the untouched columns.
class PanelDataset {
 public:
  PanelDataset() = default;

  /// Builds a dataset from row-wise keys; rows are reordered. Throws
  /// DuplicateKey on a repeated (entity, year).
  static PanelDataset from_rows(const std::vector<std::string>& entity, const std::vector<int>& year,
                                std::map<std::string, std::vector<double>> variables,
                                const std::string& lineage = "input");

  std::size_t n_rows() const { return year_.size(); }
  std::size_t n_entities() const { return entities_.size(); }

  const std::vector<std::string>& entity_ids() const { return entities_; }
  std::span<const std::size_t> entity_index() const { return entity_of_row_; }
  std::span<const int> years() const { return year_; }

  /// Rows of entity e are [entity_begin(e), entity_begin(e+1)).
  std::size_t entity_begin(std::size_t e) const { return entity_start_[e]; }

  bool has(std::string_view name) const { return columns_.find(name) != columns_.end(); }
  std::span<const double> column(std::string_view name) const;
  const std::string& lineage(std::string_view name) const;
  std::vector<std::string> variable_names() const;

  /// Calendar years absent between an entity's first and last observation.
  std::size_t gap_count() const { return gaps_; }

  PanelDataset with_column(const std::string& name, std::vector<double> values, const std::string& lineage) const;
  PanelDataset filter_rows(const std::vector<bool>& keep) const;

 private:
  void index_entities();

  std::vector<std::string> entities_;
  std::vector<std::size_t> entity_of_row_;
  std::vector<std::size_t> entity_start_;
  std::vector<int> year_;
  std::size_t gaps_ = 0;
  std::map<std::string, std::shared_ptr<const Column>, std::less<>> columns_;
};

/// Maps dataset names to CSV header names. With no variables listed, every
/// non-key column is loaded under its header name.
struct Schema {
  std::string entity = std::string(columns::kEntity);
  std::string year = std::string(columns::kYear);
  std::map<std::string, std::string> variables;
};

PanelDataset load_panel(std::istream& in, const Schema& schema = {});
PanelDataset load_panel_file(const std::string& path, const Schema& schema = {});
void write_panel(std::ostream& out, const PanelDataset& d, const std::vector<std::string>& variables);

PanelDataset derive_vote_share(const PanelDataset& d, std::string_view nonagr_col, std::string_view land_col,
                               const std::string& out = std::string(columns::kShare));

struct CellRef {
  std::string entity;
  int year = 0;
};

struct LogPerCapitaResult {
  PanelDataset data;
  std::size_t non_positive = 0;
  std::vector<CellRef> non_positive_cells;
};

/// y = ln(spend / deflator / pop). Non-positive inputs leave the cell missing
/// and are counted rather than thrown.
LogPerCapitaResult derive_log_per_capita(const PanelDataset& d, std::string_view spend_col,
                                         std::string_view pop_col,
                                         std::optional<std::string_view> deflator_col = std::nullopt,
                                         const std::string& out = std::string(columns::kOutcome));

/// 1 / (a + b), missing when the sum is zero.
PanelDataset derive_inverse_sum(const PanelDataset& d, std::string_view a, std::string_view b,
                                const std::string& out);
/// ln(x), missing for x <= 0.
PanelDataset derive_log(const PanelDataset& d, std::string_view col, const std::string& out);

/// Adds share, y, inv_votes and log_pop from the canonical input columns. The
/// deflator is used when present.
struct StandardVariables {
  PanelDataset data;
  std::size_t non_positive = 0;
};
StandardVariables derive_standard_variables(const PanelDataset& d);

std::string lag_name(std::string_view var, int k);
std::string lead_name(std::string_view var, int k);

/// Adds var.lagK (K=1..n_lags) and var.leadK (K=1..n_leads). A lag or lead is
/// only filled when the target calendar year exists for that entity.
PanelDataset build_lags_leads(const PanelDataset& d, std::string_view var, int n_leads, int n_lags);

/// Complete-case estimation sample over the given full-length columns.
std::vector<std::size_t> complete_cases(std::span<const std::span<const double>> cols, std::size_t n_rows);

/// Dense entity/period codes for a subset of rows.
kernels::Groups make_groups(const PanelDataset& d, std::span<const std::size_t> rows);

struct WithinResult {
  Eigen::MatrixXd values;          // rows x vars
  std::vector<std::size_t> rows;   // dataset row of each output row
  std::vector<std::string> names;
  int iterations = 0;
};

/// Two-way (or one-way) within transformation over the complete-case rows of
/// the listed variables. Throws EmptySample / NoConvergence.
WithinResult within_transform(const PanelDataset& d, const std::vector<std::string>& vars,
                              const FixedEffectsSpec& fe);

/// Same transformation on an already-assembled matrix.
int within_transform_matrix(Eigen::Ref<Eigen::MatrixXd> m, const kernels::Groups& groups,
                            const FixedEffectsSpec& fe);

}  // namespace wvp
