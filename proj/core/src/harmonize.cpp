#include "triagekit/harmonize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "triagekit/errors.hpp"
#include "triagekit/numeric.hpp"

namespace triagekit {

std::string_view to_token(AssayDirection direction) {
  switch (direction) {
    case AssayDirection::lactate_to_pyruvate: return "lactate_to_pyruvate";
    case AssayDirection::pyruvate_to_lactate: return "pyruvate_to_lactate";
    case AssayDirection::unspecified: return "unspecified";
  }
  return "?";
}

std::optional<AssayDirection> assay_direction_from_token(std::string_view token) {
  if (token == "lactate_to_pyruvate") return AssayDirection::lactate_to_pyruvate;
  if (token == "pyruvate_to_lactate") return AssayDirection::pyruvate_to_lactate;
  if (token == "unspecified") return AssayDirection::unspecified;
  return std::nullopt;
}

std::string_view to_token(HarmonizationMode mode) {
  switch (mode) {
    case HarmonizationMode::affine_interval: return "affine_interval";
    case HarmonizationMode::uln_ratio: return "uln_ratio";
    case HarmonizationMode::identity: return "identity";
  }
  return "?";
}

std::optional<HarmonizationMode> harmonization_mode_from_token(std::string_view token) {
  if (token == "affine_interval") return HarmonizationMode::affine_interval;
  if (token == "uln_ratio") return HarmonizationMode::uln_ratio;
  if (token == "identity") return HarmonizationMode::identity;
  return std::nullopt;
}

void AssayRegistry::add(AssayMethod method) {
  if (method.id.empty()) throw RegistryError("assay method with empty id");
  if (method.unit.empty())
    throw RegistryError("assay '" + method.id + "': unit must be non-empty");
  const auto& iv = method.interval;
  if (!std::isfinite(iv.lower) || !std::isfinite(iv.upper) || iv.lower <= 0.0 ||
      iv.lower >= iv.upper) {
    throw RegistryError("assay '" + method.id + "': reference interval must satisfy 0 < lower < upper, got [" +
                        format_double_shortest(iv.lower) + ", " +
                        format_double_shortest(iv.upper) + "]");
  }
  auto [it, inserted] = methods_.emplace(method.id, std::move(method));
  if (!inserted) throw RegistryError("duplicate assay id: " + it->first);
}

const AssayMethod* AssayRegistry::find(std::string_view id) const {
  auto it = methods_.find(id);
  return it == methods_.end() ? nullptr : &it->second;
}

const AssayMethod& AssayRegistry::at(std::string_view id) const {
  const auto* method = find(id);
  if (!method) throw UnknownAssayError(std::string(id));
  return *method;
}

AssayRegistry AssayRegistry::parse(std::string_view text, std::string_view origin) {
  AssayRegistry registry;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line) {  // commas and whitespace both separate fields
      if (c == ',') c = ' ';
    }
    std::istringstream fields(line);
    std::string id, analyte, direction_tok, unit, lower_tok, upper_tok, extra;
    if (!(fields >> id)) continue;  // blank line
    if (!(fields >> analyte >> direction_tok >> unit >> lower_tok >> upper_tok)) {
      throw RegistryError(std::string(origin) + ":" + std::to_string(lineno) +
                          ": expected 'id analyte direction unit lower upper'");
    }
    if (fields >> extra) {
      throw RegistryError(std::string(origin) + ":" + std::to_string(lineno) +
                          ": unexpected trailing field '" + extra + "'");
    }
    const auto direction = assay_direction_from_token(direction_tok);
    if (!direction) {
      throw RegistryError(std::string(origin) + ":" + std::to_string(lineno) +
                          ": unknown direction '" + direction_tok + "'");
    }
    ReferenceInterval interval;
    auto parse_num = [&](const std::string& tok, double& out) {
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw RegistryError(std::string(origin) + ":" + std::to_string(lineno) +
                            ": malformed number '" + tok + "'");
      }
    };
    parse_num(lower_tok, interval.lower);
    parse_num(upper_tok, interval.upper);
    try {
      registry.add({id, analyte, *direction, unit, interval});
    } catch (const RegistryError& e) {
      throw RegistryError(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return registry;
}

AssayRegistry AssayRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError(path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

AssayRegistry default_assay_registry() {
  AssayRegistry registry;
  registry.add({"kit_LP", "LDH", AssayDirection::lactate_to_pyruvate, "U/L", {135.0, 250.0}});
  registry.add({"kit_PL", "LDH", AssayDirection::pyruvate_to_lactate, "U/L", {240.0, 480.0}});
  registry.add({"crp_std", "hs_CRP", AssayDirection::unspecified, "mg/L", {0.5, 10.0}});
  return registry;
}

double harmonize_value(double x, const AssayMethod& src, const AssayMethod& dst,
                       HarmonizationMode mode) {
  if (!std::isfinite(x)) throw NonFiniteValueError("measurement for analyte '" + src.analyte + "'");
  if (src.analyte != dst.analyte) {
    throw AnalyteMismatchError("cannot harmonize '" + src.analyte + "' (" + src.id + ") into '" +
                               dst.analyte + "' (" + dst.id + ")");
  }
  if (src.unit != dst.unit) {
    throw UnitMismatchError("assays " + src.id + " and " + dst.id + " report in different units ('" +
                            src.unit + "' vs '" + dst.unit + "'); same-unit mapping only");
  }
  switch (mode) {
    case HarmonizationMode::identity:
      return x;
    case HarmonizationMode::uln_ratio:
      if (src.interval.upper == 0.0) {
        throw DegenerateIntervalError("assay " + src.id + " has zero upper reference limit");
      }
      return x * (dst.interval.upper / src.interval.upper);
    case HarmonizationMode::affine_interval: {
      const double src_span = src.interval.upper - src.interval.lower;
      if (src_span == 0.0) {
        throw DegenerateIntervalError("assay " + src.id + " has a degenerate reference interval");
      }
      // Reference limits map onto each other exactly.
      if (x == src.interval.lower) return dst.interval.lower;
      if (x == src.interval.upper) return dst.interval.upper;
      return dst.interval.lower +
             (x - src.interval.lower) * ((dst.interval.upper - dst.interval.lower) / src_span);
    }
  }
  throw Error("unhandled harmonization mode");
}

HarmonizedPanel harmonize_panel(const LabPanel& labs, const HarmonizationConfig& cfg,
                                const AssayRegistry& registry,
                                const std::set<std::string>& assay_sensitive_features) {
  HarmonizedPanel out;
  for (const auto& [feature, lab] : labs) {
    if (!lab.assay_id.empty()) registry.at(lab.assay_id);  // must be known

    if (cfg.mode == HarmonizationMode::identity || !assay_sensitive_features.contains(feature)) {
      out.values.emplace(feature, lab.value);
      continue;
    }

    auto mapping_it = cfg.mappings.find(feature);
    if (mapping_it == cfg.mappings.end()) throw MissingMappingError(feature);
    const FeatureMapping& mapping = mapping_it->second;

    const std::string& src_id = lab.assay_id.empty() ? mapping.source_assay : lab.assay_id;
    if (src_id == mapping.target_assay) {
      out.values.emplace(feature, lab.value);  // already in the target frame
      continue;
    }
    if (src_id != mapping.source_assay) {
      throw MissingMappingError(feature, "value reported by assay '" + src_id +
                                             "' but the configured mapping is '" +
                                             mapping.source_assay + "' -> '" +
                                             mapping.target_assay + "'");
    }
    const double mapped =
        harmonize_value(lab.value, registry.at(src_id), registry.at(mapping.target_assay), cfg.mode);
    if (mapped < 0.0) {
      out.warnings.push_back(feature + ": harmonized value " + format_double_shortest(mapped) +
                             " is negative (affine extrapolation below the reference interval)");
    }
    out.values.emplace(feature, mapped);
  }
  return out;
}

}  // namespace triagekit
