#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pwppe {

/// Flat `key=value` text document. Blank lines and lines starting with '#' are ignored;
/// keys keep insertion order on output.
class KeyValues {
public:
  static KeyValues parse(const std::string& text, const std::string& source = "<text>");
  static KeyValues load(const std::string& path);
  void save(const std::string& path) const;
  std::string to_string() const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint_or(const std::string& key, std::uint64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  /// Keys not in `known` (exact) and not under any of `known_prefixes`.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known,
                                        const std::vector<std::string>& known_prefixes = {}) const;
  const std::vector<std::string>& keys() const noexcept { return order_; }

private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  std::string source_;
};

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace pwppe
