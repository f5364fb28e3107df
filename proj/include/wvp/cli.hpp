#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "wvp/dgp.hpp"
#include "wvp/panel.hpp"

namespace wvp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Entry point behind the wvpanel binary. args[0] is the program name.
/// Errors are reported as a JSON object on `err`; artifacts are only written
/// once every output of the run has been produced.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Rows whose indicator equals `value`. Throws UnknownVariable, or
/// NonBinaryIndicator when a non-missing cell is neither 0 nor 1.
PanelDataset split_sample(const PanelDataset& d, const std::string& indicator, double value);

nlohmann::json dgp_to_json(const DgpConfig& cfg);
/// Missing keys keep their defaults; unknown keys throw ConfigInvalid.
DgpConfig dgp_from_json(const nlohmann::json& j);

}  // namespace wvp::cli
