#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace triagekit {

/// Flat key-value text with [section] headers and '#' comments; one
/// `key = value` per line. Diff-friendly, which matters for audit trails.
class KvFile {
public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  /// Throws ConfigError on syntax problems or duplicate keys.
  static KvFile parse(std::string_view text, std::string_view origin = "<string>");
  /// Throws FileUnreadableError / ConfigError.
  static KvFile load(const std::filesystem::path& path);

  bool has_section(std::string_view section) const;
  std::vector<std::string> section_names() const;

  /// Keys of a section in file order. Empty if the section is absent.
  std::vector<std::string> keys(std::string_view section) const;

  std::optional<std::string> get(std::string_view section, std::string_view key) const;

  const std::string& origin() const noexcept { return origin_; }
  int line_of(std::string_view section, std::string_view key) const;

  /// Every section/key must be consumed by one of the readers below;
  /// call this last to reject unknown keys. Throws ConfigError naming them.
  void expect_all_consumed() const;

  /// get() + consumption tracking for expect_all_consumed().
  std::optional<std::string> take(std::string_view section, std::string_view key);

  /// take() a value that must parse as a double. Throws ConfigError.
  std::optional<double> take_number(std::string_view section, std::string_view key);

  /// take() a value that must parse as a non-negative integer. Throws ConfigError.
  std::optional<unsigned long long> take_count(std::string_view section, std::string_view key);

  /// Consume every key of a section matching `prefix`, returning
  /// (key-without-prefix, value) pairs in file order.
  std::vector<std::pair<std::string, std::string>> take_prefixed(std::string_view section,
                                                                 std::string_view prefix);

private:
  struct Keyed {
    std::string key;
    Entry entry;
    bool consumed = false;
  };
  std::string origin_;
  std::map<std::string, std::vector<Keyed>> sections_;  // section -> entries in file order
};

/// Split a comma-separated value into trimmed, non-empty items.
std::vector<std::string> split_list(std::string_view value);

}  // namespace triagekit
