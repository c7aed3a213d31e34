#include "triagekit/run_config.hpp"

#include <fstream>
#include <sstream>

#include "triagekit/errors.hpp"
#include "triagekit/kvfile.hpp"

namespace triagekit {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base_dir, std::string_view value,
                              std::string_view origin, int line) {
  std::filesystem::path p{std::string(value)};
  if (p.is_relative()) p = base_dir / p;
  if (!std::filesystem::exists(p)) {
    throw ConfigError(std::string(origin) + ":" + std::to_string(line) +
                      ": referenced file does not exist: " + p.string());
  }
  return p;
}

}  // namespace

RunConfig RunConfig::for_mode(HarmonizationMode mode) {
  RunConfig cfg;
  cfg.harmonization.mode = mode;
  return cfg;
}

RunConfig parse_run_config(std::string_view text, std::string_view origin,
                           const std::filesystem::path& base_dir) {
  KvFile kv = KvFile::parse(text, origin);
  RunConfig cfg;

  if (const auto rule = kv.take("paths", "rule")) {
    cfg.rule_path = resolve(base_dir, *rule, origin, kv.line_of("paths", "rule"));
  }
  if (const auto cohort = kv.take("paths", "cohort")) {
    cfg.cohort_path = resolve(base_dir, *cohort, origin, kv.line_of("paths", "cohort"));
  }
  if (const auto registry = kv.take("paths", "registry")) {
    cfg.registry_path = resolve(base_dir, *registry, origin, kv.line_of("paths", "registry"));
  }
  if (const auto out = kv.take("paths", "output_dir")) {
    std::filesystem::path p{*out};
    cfg.output_dir = p.is_relative() ? base_dir / p : p;
  }

  if (const auto mode = kv.take("harmonize", "mode")) {
    const auto parsed = harmonization_mode_from_token(*mode);
    if (!parsed) {
      throw ConfigError(std::string(origin) + ":" +
                        std::to_string(kv.line_of("harmonize", "mode")) +
                        ": unknown harmonization mode '" + *mode + "'");
    }
    cfg.harmonization.mode = *parsed;
  }
  for (const auto& [feature, value] : kv.take_prefixed("harmonize", "map.")) {
    const int line = kv.line_of("harmonize", "map." + feature);
    const auto arrow = value.find("->");
    if (arrow == std::string::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line) +
                        ": expected 'source_assay -> target_assay'");
    }
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    FeatureMapping mapping{strip(value.substr(0, arrow)), strip(value.substr(arrow + 2))};
    if (mapping.source_assay.empty() || mapping.target_assay.empty()) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line) +
                        ": empty assay id in mapping");
    }
    cfg.harmonization.mappings[feature] = std::move(mapping);
  }

  if (const auto v = kv.take("schema", "id")) cfg.schema.id_column = *v;
  if (const auto v = kv.take("schema", "age")) cfg.schema.age_column = *v;
  if (const auto v = kv.take("schema", "sex")) cfg.schema.sex_column = *v;
  if (const auto v = kv.take("schema", "severity")) cfg.schema.severity_column = *v;
  if (const auto v = kv.take("schema", "outcome")) cfg.schema.outcome_column = *v;
  if (const auto labs = kv.take_prefixed("schema", "lab."); !labs.empty()) {
    cfg.schema.labs.clear();  // naming any lab column replaces the stock lab list
    for (const auto& [feature, value] : labs) {
      const auto cols = split_list(value);
      if (cols.empty() || cols.size() > 2) {
        throw ConfigError(std::string(origin) + ":" +
                          std::to_string(kv.line_of("schema", "lab." + feature)) +
                          ": expected 'value_column[, assay_column]'");
      }
      cfg.schema.labs.push_back({feature, cols[0], cols.size() == 2 ? cols[1] : ""});
    }
  }

  if (const auto required = kv.take("evaluate", "required")) {
    for (auto& item : split_list(*required)) cfg.required_features.insert(std::move(item));
  }
  if (const auto formats = kv.take("evaluate", "formats")) {
    for (const auto& item : split_list(*formats)) {
      const auto parsed = report_format_from_token(item);
      if (!parsed) {
        throw ConfigError(std::string(origin) + ":" +
                          std::to_string(kv.line_of("evaluate", "formats")) +
                          ": unknown report format '" + item + "'");
      }
      cfg.formats.push_back(*parsed);
    }
  }

  if (const auto seed = kv.take_count("synth", "seed")) cfg.seed = *seed;

  kv.expect_all_consumed();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError(path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.string(), path.parent_path());
}

}  // namespace triagekit
