#include "runner/table.hpp"

#include <cmath>
#include <fmt/format.h>
#include <ostream>
#include <stdexcept>

#include "runner/config.hpp"

#ifndef NANOGUIDE_VERSION
#define NANOGUIDE_VERSION "0.0.0"
#endif

namespace nanoguide::runner {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("row width does not match columns");
  rows.push_back(std::move(row));
}

void Table::add_meta(std::string key, std::string value) { meta.emplace_back(std::move(key), std::move(value)); }

void Table::add_meta(std::string key, double value) { add_meta(std::move(key), format_number(value)); }

std::string format_number(double v) {
  if (v == 0.0) return "0";
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.12g}", v);
}

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  return std::get<std::string>(c);
}

template <class Fn>
std::string joined(const std::vector<Column>& cols, Fn&& field) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += field(cols[i]);
  }
  return out;
}

}  // namespace

void write_csv(std::ostream& os, const Table& table, const ArtifactInfo& info) {
  os << "# tool: nanoguide " << NANOGUIDE_VERSION << '\n';
  os << "# kind: " << info.kind << '\n';
  os << "# config_hash: " << info.config_hash << '\n';
  os << "# seed: " << info.seed << '\n';
  for (const auto& [key, value] : table.meta) os << "# " << key << ": " << value << '\n';
  os << "# columns: " << joined(table.columns, [](const Column& c) { return c.name; }) << '\n';
  os << "# units: " << joined(table.columns, [](const Column& c) { return c.unit; }) << '\n';
  os << joined(table.columns, [](const Column& c) { return c.name; }) << '\n';
  std::string line;
  for (const auto& row : table.rows) {
    line.clear();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      line += cell_text(row[i]);
    }
    line += '\n';
    os << line;
  }
}

void write_manifest(std::ostream& os, const ArtifactInfo& info, const std::string& artifact,
                    const std::string& artifact_bytes, std::size_t rows) {
  os << "tool = nanoguide\n";
  os << "version = " << NANOGUIDE_VERSION << '\n';
  os << "kind = " << info.kind << '\n';
  os << "config_hash = " << info.config_hash << '\n';
  os << "seed = " << info.seed << '\n';
  os << "artifact = " << artifact << '\n';
  os << "artifact_hash = " << hash_hex(fnv1a64(artifact_bytes)) << '\n';
  os << "rows = " << rows << '\n';
}

std::string_view tool_version() { return NANOGUIDE_VERSION; }

}  // namespace nanoguide::runner
