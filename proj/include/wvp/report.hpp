#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "wvp/binscatter.hpp"
#include "wvp/dgp.hpp"
#include "wvp/event_study.hpp"
#include "wvp/regression.hpp"
#include "wvp/threshold.hpp"

namespace wvp::report {

using nlohmann::json;

json to_json(const FitResult& fit, bool with_covariance = false);
json to_json(const WaldResult& w);
json to_json(const ThresholdInterval& ci);
json to_json(const LinearityTest& t);
json to_json(const MonteCarloReport& r);

/// Headline layout: one column per headline parameter with its clustered SE,
/// plus the threshold point, N and cluster count.
json threshold_table(const ThresholdFit& tf);

json binscatter_lines(const BinnedScatter& b);

void write_profile_csv(std::ostream& out, const std::vector<ProfilePoint>& profile);
void write_path_csv(std::ostream& out, const EventStudyPath& path);
void write_bins_csv(std::ostream& out, const BinnedScatter& b);

/// Event-time path with 95% band and a dashed vertical line at horizon 0.
std::string path_svg(const EventStudyPath& path, const std::string& title);
/// Bin means with the two fitted lines and a dashed vertical split line.
std::string binscatter_svg(const BinnedScatter& b, const std::string& title, const std::string& x_label,
                           const std::string& y_label);

struct SummaryRow {
  std::string label;
  std::string variable;
  std::size_t n = 0;
  double mean = kMissing;
  double sd = kMissing;
  double min = kMissing;
  double max = kMissing;
};

/// Mean, SD, min and max of each variable over its non-missing cells.
std::vector<SummaryRow> summarize(const PanelDataset& d, const std::vector<std::pair<std::string, std::string>>& vars);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
/// Fixed-width text rendering, one row per variable.
std::string summary_text(const std::vector<SummaryRow>& rows, int first_year, int last_year);

}  // namespace wvp::report
