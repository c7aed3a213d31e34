#include "triagekit/kvfile.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "triagekit/errors.hpp"

namespace triagekit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

KvFile KvFile::parse(std::string_view text, std::string_view origin) {
  KvFile file;
  file.origin_ = std::string(origin);
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    // Full-line and trailing comments; '#' inside a value must be preceded
    // by whitespace to count as a comment.
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      if (hash == 0 || line[hash - 1] == ' ' || line[hash - 1] == '\t') {
        line = line.substr(0, hash);
      }
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto where = [&] { return std::string(origin) + ":" + std::to_string(lineno); };

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(where() + ": malformed section header '" + std::string(line) + "'");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(where() + ": empty section name");
      file.sections_.try_emplace(section);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where() + ": expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    if (key.empty()) throw ConfigError(where() + ": empty key");
    if (section.empty()) {
      throw ConfigError(where() + ": key '" + key + "' appears before any [section] header");
    }
    auto& entries = file.sections_[section];
    for (const auto& e : entries) {
      if (e.key == key) {
        throw ConfigError(where() + ": duplicate key '" + key + "' in section [" + section + "]");
      }
    }
    entries.push_back({key, {value, lineno}, false});
  }
  return file;
}

KvFile KvFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError(path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

bool KvFile::has_section(std::string_view section) const {
  return sections_.contains(std::string(section));
}

std::vector<std::string> KvFile::section_names() const {
  std::vector<std::string> names;
  names.reserve(sections_.size());
  for (const auto& [name, _] : sections_) names.push_back(name);
  return names;
}

std::vector<std::string> KvFile::keys(std::string_view section) const {
  std::vector<std::string> out;
  auto it = sections_.find(std::string(section));
  if (it == sections_.end()) return out;
  for (const auto& e : it->second) out.push_back(e.key);
  return out;
}

std::optional<std::string> KvFile::get(std::string_view section, std::string_view key) const {
  auto it = sections_.find(std::string(section));
  if (it == sections_.end()) return std::nullopt;
  for (const auto& e : it->second) {
    if (e.key == key) return e.entry.value;
  }
  return std::nullopt;
}

int KvFile::line_of(std::string_view section, std::string_view key) const {
  auto it = sections_.find(std::string(section));
  if (it == sections_.end()) return 0;
  for (const auto& e : it->second) {
    if (e.key == key) return e.entry.line;
  }
  return 0;
}

std::optional<std::string> KvFile::take(std::string_view section, std::string_view key) {
  auto it = sections_.find(std::string(section));
  if (it == sections_.end()) return std::nullopt;
  for (auto& e : it->second) {
    if (e.key == key) {
      e.consumed = true;
      return e.entry.value;
    }
  }
  return std::nullopt;
}

std::optional<double> KvFile::take_number(std::string_view section, std::string_view key) {
  auto value = take(section, key);
  if (!value) return std::nullopt;
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value->data(), value->data() + value->size(), out);
  if (ec != std::errc{} || ptr != value->data() + value->size() || !std::isfinite(out)) {
    throw ConfigError(origin_ + ":" + std::to_string(line_of(section, key)) + ": key '" +
                      std::string(key) + "' expects a finite number, got '" + *value + "'");
  }
  return out;
}

std::optional<unsigned long long> KvFile::take_count(std::string_view section,
                                                     std::string_view key) {
  auto value = take(section, key);
  if (!value) return std::nullopt;
  unsigned long long out = 0;
  auto [ptr, ec] = std::from_chars(value->data(), value->data() + value->size(), out);
  if (ec != std::errc{} || ptr != value->data() + value->size()) {
    throw ConfigError(origin_ + ":" + std::to_string(line_of(section, key)) + ": key '" +
                      std::string(key) + "' expects a non-negative integer, got '" + *value + "'");
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> KvFile::take_prefixed(std::string_view section,
                                                                       std::string_view prefix) {
  std::vector<std::pair<std::string, std::string>> out;
  auto it = sections_.find(std::string(section));
  if (it == sections_.end()) return out;
  for (auto& e : it->second) {
    if (e.key.size() > prefix.size() && e.key.starts_with(prefix)) {
      e.consumed = true;
      out.emplace_back(e.key.substr(prefix.size()), e.entry.value);
    }
  }
  return out;
}

void KvFile::expect_all_consumed() const {
  std::string unknown;
  for (const auto& [section, entries] : sections_) {
    for (const auto& e : entries) {
      if (!e.consumed) {
        if (!unknown.empty()) unknown += ", ";
        unknown += "[" + section + "] " + e.key + " (line " + std::to_string(e.entry.line) + ")";
      }
    }
  }
  if (!unknown.empty()) throw ConfigError(origin_ + ": unknown keys: " + unknown);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    if (comma == std::string_view::npos) comma = value.size();
    auto item = trim(value.substr(start, comma - start));
    if (!item.empty()) items.emplace_back(item);
    start = comma + 1;
  }
  return items;
}

}  // namespace triagekit
