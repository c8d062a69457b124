#include "wglab/output.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include <json.hpp>

#include "wglab/errors.hpp"

#ifndef WGLAB_VERSION
#define WGLAB_VERSION "0.0.0"
#endif

namespace wglab {

using json = nlohmann::ordered_json;

std::string software_version() { return WGLAB_VERSION; }

CsvTable::CsvTable(std::vector<std::string> columns) {
  columns_.reserve(columns.size() + 1);
  columns_.emplace_back("schema_version");
  for (auto& c : columns) columns_.push_back(std::move(c));
}

void CsvTable::add_row(std::vector<CsvValue> values) {
  if (values.size() + 1 != columns_.size()) {
    throw Error(fmt::format("CSV row has {} fields, header has {}", values.size(), columns_.size() - 1));
  }
  rows_.push_back(std::move(values));
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string cell(const CsvValue& v) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return csv_escape(s); }
    std::string operator()(double d) const {
      if (std::isnan(d)) return "nan";
      if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
      return fmt::format("{}", d);
    }
    std::string operator()(long long i) const { return fmt::format("{}", i); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
  };
  return std::visit(Visitor{}, v);
}

json number(double d) {
  if (std::isfinite(d)) return d;
  if (std::isnan(d)) return "nan";
  return d > 0 ? "inf" : "-inf";
}

}  // namespace

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t c = 0; c < columns_.size(); ++c) out += (c ? "," : "") + csv_escape(columns_[c]);
  out += "\n";
  for (const auto& row : rows_) {
    out += std::to_string(kCsvSchemaVersion);
    for (const auto& v : row) out += "," + cell(v);
    out += "\n";
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::filesystem::path write_text(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error("failed writing " + path.string());
  return path;
}

std::string summary_json(const std::string& experiment, const std::string& status,
                         const std::vector<EstimateReport>& reports, const std::string& message) {
  json j;
  j["experiment"] = experiment;
  j["software_version"] = software_version();
  j["schema_version"] = kCsvSchemaVersion;
  j["status"] = status;
  if (!message.empty()) j["message"] = message;
  json arr = json::array();
  for (const auto& r : reports) {
    json e;
    e["name"] = r.name;
    e["lhs"] = number(r.lhs);
    e["rhs"] = number(r.rhs);
    e["ratio"] = number(r.ratio);
    json p = json::object();
    for (const auto& [k, v] : r.params) p[k] = number(v);
    e["params"] = p;
    e["slope"] = r.slope ? number(*r.slope) : json(nullptr);
    e["r_squared"] = r.r_squared ? number(*r.r_squared) : json(nullptr);
    e["tolerance"] = number(r.tolerance);
    e["pass"] = r.pass;
    e["degenerate"] = r.degenerate;
    e["note"] = r.note;
    arr.push_back(std::move(e));
  }
  j["reports"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::string manifest_json(const std::string& experiment, const std::string& config_text,
                          const std::vector<std::filesystem::path>& files) {
  json j;
  j["experiment"] = experiment;
  j["software_version"] = software_version();
  j["config_sha256"] = sha256_hex(config_text);
  json arr = json::array();
  for (const auto& f : files) {
    std::ifstream is(f, std::ios::binary);
    if (!is) throw Error("cannot read " + f.string() + " for hashing");
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    json e;
    e["file"] = f.filename().string();
    e["bytes"] = bytes.size();
    e["sha256"] = sha256_hex(bytes);
    arr.push_back(std::move(e));
  }
  j["files"] = std::move(arr);
  return j.dump(2) + "\n";
}

}  // namespace wglab
