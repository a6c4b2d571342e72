#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "ctxmt/errors.hpp"

namespace ctxmt::csv {

// Opens `path` and writes the "# <schema>" line and the column header.
inline std::ofstream create(const std::filesystem::path& path, const std::string& schema,
                            const std::string& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# " << schema << '\n' << header << '\n' << std::setprecision(17);
  return out;
}

inline std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

// Data rows (split) after the expected header; comment lines are skipped.
inline std::vector<std::vector<std::string>> read(const std::filesystem::path& path,
                                                  const std::string& header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const auto width = split(header).size();
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != header) {
        throw DataError(path.string() + ": expected header '" + header + "', found '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    auto f = split(line);
    if (f.size() != width) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(width) + " fields, found " + std::to_string(f.size()));
    }
    rows.push_back(std::move(f));
  }
  if (!header_seen) throw DataError(path.string() + ": missing CSV header");
  return rows;
}

}  // namespace ctxmt::csv
