#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spca/errors.hpp"
#include "spca/instance_io.hpp"
#include "spca/version.hpp"

namespace spca {

// Minimal RFC-4180 CSV writer.  Fields containing a comma, quote, CR or LF
// are quoted with internal quotes doubled; rows end with LF.  Numeric fields
// are rendered through format_double so output is locale independent and
// byte-reproducible.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void write_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out_ << ',';
      write_field(fields[i]);
    }
    out_ << '\n';
  }

  void write_row(std::initializer_list<std::string> fields) {
    write_row(std::vector<std::string>(fields));
  }

 private:
  void write_field(const std::string& f) {
    const bool needs_quotes =
        f.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) {
      out_ << f;
      return;
    }
    out_ << '"';
    for (char c : f) {
      if (c == '"') out_ << "\"\"";
      else out_ << c;
    }
    out_ << '"';
  }

  std::ostream& out_;
};

// Run provenance recorded next to every tabular output.  CSV headers are
// part of the file contract and cannot carry extra columns, so the metadata
// lives in a JSON sidecar named "<output>.meta.json".
struct RunMetadata {
  std::string tool_version = kVersion;
  std::string config_digest;  // hex FNV-1a of the effective configuration
  std::uint64_t master_seed = 0;
};

inline nlohmann::json metadata_to_json(const RunMetadata& meta) {
  nlohmann::json j;
  j["tool_version"] = meta.tool_version;
  j["config_digest"] = meta.config_digest;
  j["master_seed"] = meta.master_seed;
  return j;
}

inline void write_metadata_sidecar(const std::string& csv_path,
                                   const RunMetadata& meta) {
  const std::string path = csv_path + ".meta.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << metadata_to_json(meta).dump(2) << '\n';
  if (!out) throw Error("write failed: " + path);
}

}  // namespace spca
