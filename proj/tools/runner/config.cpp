#include "runner/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>

namespace nanoguide::runner {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, v);
  if (t.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(std::string(key), fmt::format("expected a number, got '{}'", t));
  }
  if (!std::isfinite(v)) throw ConfigError(std::string(key), "value must be finite");
  return v;
}

}  // namespace

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::runtime_error(key + ": " + message), key_(std::move(key)) {}

Config Config::parse(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("<syntax>", fmt::format("line {}: {}", e.line(), e.message()));
  }
  Config cfg;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      cfg.values_[name] = trim(node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) cfg.values_[name + "." + key] = trim(leaf.data());
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  Config cfg = parse(in);
  cfg.dir_ = path.parent_path();
  return cfg;
}

const std::string* Config::lookup(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  read_.insert(it->first);
  return &it->second;
}

bool Config::has(std::string_view key) const { return values_.find(key) != values_.end(); }

bool Config::has_section(std::string_view section) const {
  const std::string prefix = std::string(section) + ".";
  const auto it = values_.lower_bound(prefix);
  return it != values_.end() && it->first.starts_with(prefix);
}

std::string Config::get_string(std::string_view key) const {
  const auto* v = lookup(key);
  if (!v) throw ConfigError(std::string(key), "required key is missing");
  return *v;
}

std::string Config::get_string(std::string_view key, std::string_view fallback) const {
  const auto* v = lookup(key);
  return v ? *v : std::string(fallback);
}

double Config::get_double(std::string_view key) const {
  const auto* v = lookup(key);
  if (!v) throw ConfigError(std::string(key), "required key is missing");
  return parse_double(key, *v);
}

double Config::get_double(std::string_view key, double fallback) const {
  const auto* v = lookup(key);
  return v ? parse_double(key, *v) : fallback;
}

std::optional<double> Config::find_double(std::string_view key) const {
  const auto* v = lookup(key);
  if (!v) return std::nullopt;
  return parse_double(key, *v);
}

std::uint64_t Config::get_count(std::string_view key) const {
  const auto* v = lookup(key);
  if (!v) throw ConfigError(std::string(key), "required key is missing");
  const std::string t = trim(*v);
  std::uint64_t n = 0;
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, n);
  if (t.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(std::string(key), fmt::format("expected a non-negative integer, got '{}'", t));
  }
  return n;
}

std::uint64_t Config::get_count(std::string_view key, std::uint64_t fallback) const {
  return has(key) ? get_count(key) : fallback;
}

std::vector<double> Config::get_list(std::string_view key) const {
  const std::string text = get_string(key);
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto stop = comma == std::string::npos ? text.size() : comma;
    out.push_back(parse_double(key, std::string_view(text).substr(pos, stop - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(std::string(key), fmt::format("expected true or false, got '{}'", *v));
}

void Config::set(std::string_view key, std::string value) { values_[std::string(key)] = std::move(value); }

void Config::reject_unread() const {
  for (const auto& [key, value] : values_) {
    if (!read_.contains(key)) throw ConfigError(key, "unknown key for this experiment kind");
  }
}

std::string Config::canonical(const std::set<std::string>& exclude) const {
  std::string out;
  for (const auto& [key, value] : values_) {
    if (exclude.contains(key)) continue;
    out += key + " = " + value + "\n";
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

}  // namespace nanoguide::runner
