#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctxmt/augment.hpp"
#include "ctxmt/corpus.hpp"
#include "ctxmt/tokenizer.hpp"
#include "ctxmt/transformer.hpp"

namespace ctxmt {

struct TrainConfig {
  double peak_lr = 5e-4;
  std::size_t warmup_steps = 4000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
  std::size_t max_steps = 20000;
  std::size_t patience = 10;  // validations without improvement
  std::size_t eval_every = 500;
  std::size_t batch_size = 32;  // sentences per step
  double label_smoothing = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

// Linear warm-up to peak_lr, then inverse square-root decay:
// peak_lr * min(step / warmup, sqrt(warmup / step)). step >= 1.
double lr_schedule(std::size_t step, const TrainConfig& cfg);

struct TrainLogRow {
  std::size_t step = 0;
  double loss = 0.0;  // mean label-smoothed loss per token of this step's batch
  double lr = 0.0;
  double valid_ppl = std::numeric_limits<double>::quiet_NaN();  // NaN when not validated
};

struct TrainResult {
  ToyTransformer model;  // parameters with the best validation perplexity
  std::vector<TrainLogRow> log;
  std::vector<double> valid_ppl_trace;
  double best_valid_ppl = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0;
  std::size_t steps = 0;
};

// Per-token perplexity of the current sentences with the given context
// setting (no CoWord dropout, no model dropout).
double perplexity(const ToyTransformer& model, const std::vector<TranslationExample>& examples);

// Deterministic validation examples: every sentence of `valid` with context
// sizes drawn from aug (seeded by aug.seed), CoWord dropout off.
std::vector<TranslationExample> validation_examples(const std::vector<EncodedDocument>& valid,
                                                    const AugmentConfig& aug);

// Trains with Adam on the dynamic-context, CoWord-perturbed stream of `train`
// and early-stops on `valid` perplexity. Throws NumericalError on a NaN loss.
TrainResult train(const ParallelCorpus& train, const ParallelCorpus& valid, const Tokenizer& tok,
                  const ToyTransformerConfig& model_cfg, const TrainConfig& train_cfg,
                  const AugmentConfig& aug_cfg);

// Holds out every tenth document for validation.
TrainResult train(const ParallelCorpus& corpus, const Tokenizer& tok,
                  const ToyTransformerConfig& model_cfg, const TrainConfig& train_cfg,
                  const AugmentConfig& aug_cfg);

void write_train_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path);

}  // namespace ctxmt
