#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxmt/augment.hpp"
#include "ctxmt/example.hpp"
#include "ctxmt/training.hpp"
#include "ctxmt/transformer.hpp"

namespace ctxmt::cli {

struct PathsConfig {
  std::string corpus;
  std::string corpus_format = "jsonl";
  std::string valid;  // empty: every tenth training document is held out
  std::string tokenizer;
  std::string checkpoint;  // empty: <output_dir>/model.json
  std::string output_dir = "out";
  std::string contrastive;
  std::string contrastive_format = "simple-json";
};

struct EvalConfig {
  ContextSide side = ContextSide::kTarget;
  std::size_t k = 1;
  std::size_t k_max = 4;
  std::size_t beam = 1;
  bool per_word = false;
  bool bootstrap = false;
  std::size_t bootstrap_samples = 1000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t preview = 10;
};

// One JSON document with a flat section per config type.
struct ExperimentConfig {
  PathsConfig paths;
  std::size_t vocab_size = 1024;  // BPE size when a tokenizer has to be learned
  ToyTransformerConfig model;
  TrainConfig train;
  AugmentConfig augment;
  EvalConfig eval;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);
// Throws ConfigError if the file is missing or malformed.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

// Runs one command line (args excludes the program name). Returns the exit
// code: 0 success, 2 configuration error, 3 data error, 4 numerical failure,
// 1 anything else. Diagnostics go to `err`, human-readable summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctxmt::cli
