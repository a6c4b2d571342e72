#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ctxmt/corpus.hpp"
#include "ctxmt/enumeration.hpp"

namespace testutil {

// Fresh scratch directory per call under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ctxmt_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ctxmt::ParallelDocument doc(const std::string& id, int sentences) {
  std::vector<ctxmt::SentencePair> pairs;
  for (int i = 1; i <= sentences; ++i) {
    pairs.push_back({"s" + std::to_string(i) + " a b", "t" + std::to_string(i) + " x y"});
  }
  return {id, pairs};
}

// y copies c (uniform over two symbols); x is irrelevant.
inline ctxmt::EnumerationChannel copy_context_channel() {
  return ctxmt::EnumerationChannel::build(
      {"c0", "c1"}, {"x0", "x1"}, {"y0", "y1"}, {0.5, 0.5}, {0.5, 0.5},
      [](std::size_t c, std::size_t) { return std::vector<double>{c == 0 ? 1.0 : 0.0, c == 1 ? 1.0 : 0.0}; });
}

// y == x deterministically; context irrelevant.
inline ctxmt::EnumerationChannel identity_channel() {
  return ctxmt::EnumerationChannel::build(
      {"c0", "c1"}, {"a", "b", "c"}, {"A", "B", "C"}, {0.5, 0.5}, {0.3, 0.3, 0.4},
      [](std::size_t, std::size_t x) {
        std::vector<double> p(3, 0.0);
        p[x] = 1.0;
        return p;
      });
}

// y depends on both: with prob 0.8 it equals c, otherwise x.
inline ctxmt::EnumerationChannel mixed_channel() {
  return ctxmt::EnumerationChannel::build(
      {"c0", "c1"}, {"x0", "x1"}, {"y0", "y1"}, {0.5, 0.5}, {0.6, 0.4},
      [](std::size_t c, std::size_t x) {
        std::vector<double> p(2, 0.0);
        p[c] += 0.8;
        p[x] += 0.2;
        return p;
      });
}

}  // namespace testutil
