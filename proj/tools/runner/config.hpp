#pragma once

// Flat sectioned key-value configuration with typed access. Every key read by
// the experiment parser is marked; anything left unread is an unknown key.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nanoguide::runner {

/// A configuration problem tied to one key ("section.key").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message);
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class Config {
 public:
  static Config parse(std::istream& in);
  static Config load(const std::filesystem::path& path);

  [[nodiscard]] bool has(std::string_view key) const;
  [[nodiscard]] bool has_section(std::string_view section) const;

  [[nodiscard]] std::string get_string(std::string_view key) const;
  [[nodiscard]] std::string get_string(std::string_view key, std::string_view fallback) const;
  [[nodiscard]] double get_double(std::string_view key) const;
  [[nodiscard]] double get_double(std::string_view key, double fallback) const;
  [[nodiscard]] std::optional<double> find_double(std::string_view key) const;
  [[nodiscard]] std::uint64_t get_count(std::string_view key) const;
  [[nodiscard]] std::uint64_t get_count(std::string_view key, std::uint64_t fallback) const;
  /// Comma-separated doubles.
  [[nodiscard]] std::vector<double> get_list(std::string_view key) const;
  [[nodiscard]] bool get_bool(std::string_view key, bool fallback) const;

  /// Overrides or inserts a value (used for command-line overrides).
  void set(std::string_view key, std::string value);

  /// Throws ConfigError for the first key that was never read.
  void reject_unread() const;

  /// Sorted "key = value" lines, excluding the given keys.
  [[nodiscard]] std::string canonical(const std::set<std::string>& exclude = {}) const;

  [[nodiscard]] const std::filesystem::path& directory() const { return dir_; }

 private:
  const std::string* lookup(std::string_view key) const;

  std::map<std::string, std::string, std::less<>> values_;
  mutable std::set<std::string, std::less<>> read_;
  std::filesystem::path dir_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

}  // namespace nanoguide::runner
