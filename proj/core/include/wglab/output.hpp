#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "wglab/report.hpp"

namespace wglab {

/// Version tag written into every CSV row.
inline constexpr int kCsvSchemaVersion = 1;

using CsvValue = std::variant<std::string, double, long long, bool>;

/// In-memory CSV table with a fixed header. The first column is always
/// `schema_version`. Doubles use the shortest round-trip representation,
/// so identical inputs give identical bytes.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(std::vector<CsvValue> values);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<CsvValue>> rows_;
};

/// RFC 4180 quoting when the field holds a comma, quote or newline.
std::string csv_escape(const std::string& field);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Writes text to `dir / name`, creating the directory. Returns the path.
std::filesystem::path write_text(const std::filesystem::path& dir, const std::string& name, const std::string& text);

/// JSON summary: experiment id, software version, status and every report.
std::string summary_json(const std::string& experiment, const std::string& status,
                         const std::vector<EstimateReport>& reports, const std::string& message = {});

/// Manifest listing every file with its SHA-256, plus the config hash.
std::string manifest_json(const std::string& experiment, const std::string& config_text,
                          const std::vector<std::filesystem::path>& files);

/// Library version string.
std::string software_version();

}  // namespace wglab
