#pragma once

// Column-oriented results and the CSV artifact format: a '#' header block with
// provenance, column names and units, then one header row and the data.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace nanoguide::runner {

struct Column {
  std::string name;
  std::string unit;
};

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;
  /// Extra "# key: value" lines, in insertion order.
  std::vector<std::pair<std::string, std::string>> meta;

  void add_row(std::vector<Cell> row);
  void add_meta(std::string key, std::string value);
  void add_meta(std::string key, double value);
};

struct ArtifactInfo {
  std::string kind;
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// 12 significant digits; both zeros print as "0".
std::string format_number(double v);

void write_csv(std::ostream& os, const Table& table, const ArtifactInfo& info);

/// Key-value manifest recorded next to each artifact.
void write_manifest(std::ostream& os, const ArtifactInfo& info, const std::string& artifact,
                    const std::string& artifact_bytes, std::size_t rows);

std::string_view tool_version();

}  // namespace nanoguide::runner
