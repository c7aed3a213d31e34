#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace triagekit {

/// A kit's reference interval for an analyte, in the kit's reporting unit.
/// Intervals anchor inter-kit harmonization; for the enzyme activities
/// handled here both limits are finite and positive, with lower < upper.
struct ReferenceInterval {
  double lower = 0.0;
  double upper = 0.0;

  friend bool operator==(const ReferenceInterval&, const ReferenceInterval&) = default;
};

enum class AssayDirection { lactate_to_pyruvate, pyruvate_to_lactate, unspecified };

std::string_view to_token(AssayDirection direction);
std::optional<AssayDirection> assay_direction_from_token(std::string_view token);

struct AssayMethod {
  std::string id;
  std::string analyte;
  AssayDirection direction = AssayDirection::unspecified;
  std::string unit;
  ReferenceInterval interval;
};

/// Set of known assay methods, keyed by unique id. Loadable from a tabular
/// text file, one assay per line: id analyte direction unit lower upper.
class AssayRegistry {
public:
  /// Throws RegistryError on a duplicate id or invalid interval.
  void add(AssayMethod method);

  const AssayMethod* find(std::string_view id) const;
  /// Throws UnknownAssayError.
  const AssayMethod& at(std::string_view id) const;

  std::size_t size() const noexcept { return methods_.size(); }
  const std::map<std::string, AssayMethod, std::less<>>& methods() const noexcept {
    return methods_;
  }

  static AssayRegistry parse(std::string_view text, std::string_view origin = "<string>");
  static AssayRegistry load(const std::filesystem::path& path);

private:
  std::map<std::string, AssayMethod, std::less<>> methods_;
};

/// The assay methods known out of the box: the two LDH kits with their
/// published reference ranges (kit_LP 135-250 U/L, kit_PL 240-480 U/L) and a
/// standard hs-CRP assay. `data/assays.registry` in the repository holds the
/// same entries in file form.
AssayRegistry default_assay_registry();

enum class HarmonizationMode { affine_interval, uln_ratio, identity };

std::string_view to_token(HarmonizationMode mode);
std::optional<HarmonizationMode> harmonization_mode_from_token(std::string_view token);

struct FeatureMapping {
  std::string source_assay;
  std::string target_assay;

  friend bool operator==(const FeatureMapping&, const FeatureMapping&) = default;
};

struct HarmonizationConfig {
  HarmonizationMode mode = HarmonizationMode::identity;
  std::map<std::string, FeatureMapping> mappings;  // feature name -> mapping
};

/// Map a measurement from one assay method's frame into another's.
///
///   affine_interval: h(x) = dst.lower + (x - src.lower) * span_ratio,
///                    both reference limits map exactly onto each other;
///   uln_ratio:       h(x) = x * (dst.upper / src.upper);
///   identity:        h(x) = x.
///
/// Extrapolation beyond the reference interval follows the same law;
/// clamping would destroy exactly the signal a threshold rule reads.
/// Throws AnalyteMismatchError, UnitMismatchError, DegenerateIntervalError,
/// NonFiniteValueError.
double harmonize_value(double x, const AssayMethod& src, const AssayMethod& dst,
                       HarmonizationMode mode);

/// One lab measurement with the assay frame it was reported in
/// (assay_id empty when the frame is unknown or not applicable).
struct LabMeasurement {
  double value = 0.0;
  std::string assay_id;

  friend bool operator==(const LabMeasurement&, const LabMeasurement&) = default;
};

using LabPanel = std::map<std::string, LabMeasurement>;

struct HarmonizedPanel {
  std::map<std::string, double> values;
  /// Negative harmonized outputs under affine extrapolation are passed
  /// through, not clamped; each one is flagged here.
  std::vector<std::string> warnings;
};

/// Apply the configured mappings to every assay-sensitive feature of a panel;
/// all other features pass through unchanged. Input is not mutated.
/// Every non-empty assay id in the panel must exist in the registry.
/// Throws UnknownAssayError, MissingMappingError (an assay-sensitive feature
/// whose assay is not covered by cfg under a non-identity mode).
HarmonizedPanel harmonize_panel(const LabPanel& labs, const HarmonizationConfig& cfg,
                                const AssayRegistry& registry,
                                const std::set<std::string>& assay_sensitive_features);

}  // namespace triagekit
