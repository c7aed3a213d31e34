#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "triagekit/evaluation.hpp"
#include "triagekit/harmonize.hpp"

namespace triagekit {

/// Shared run configuration for the command-line tools: which rule and assay
/// registry to use, how to harmonize panels, which features a record must
/// carry, and which report formats to emit.
struct RunConfig {
  std::optional<std::filesystem::path> rule_path;
  std::optional<std::filesystem::path> cohort_path;
  std::optional<std::filesystem::path> registry_path;
  std::optional<std::filesystem::path> output_dir;  // created on demand, not required to exist
  HarmonizationConfig harmonization;
  CsvSchema schema = CsvSchema::standard();
  std::set<std::string> required_features;  // empty: every feature the rule declares
  std::vector<ReportFormat> formats;        // empty: json
  std::optional<std::uint64_t> seed;        // synth override

  /// A configuration that is just a harmonization mode with no mappings,
  /// for the `--config <mode>` shorthand.
  static RunConfig for_mode(HarmonizationMode mode);
};

/// Load from key-value text (sections [paths], [harmonize], [evaluate],
/// [synth]). Relative paths resolve against the config file's own directory;
/// referenced input files must exist. Unknown keys are rejected.
/// Throws ConfigError / FileUnreadableError.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view text, std::string_view origin = "<string>",
                           const std::filesystem::path& base_dir = ".");

}  // namespace triagekit
