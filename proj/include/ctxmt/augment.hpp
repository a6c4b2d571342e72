#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctxmt/example.hpp"
#include "ctxmt/random.hpp"

namespace ctxmt {

struct AugmentConfig {
  double coword_p = 0.0;
  std::size_t k_min = 0;
  std::size_t k_max = 4;
  ContextSide context_side = ContextSide::kTarget;
  std::uint64_t seed = 1;

  // Throws ConfigError unless 0 <= coword_p <= 1 and k_min <= k_max.
  void validate() const;
};

void to_json(nlohmann::json& j, const AugmentConfig& cfg);
void from_json(const nlohmann::json& j, AugmentConfig& cfg);

// CoWord dropout: each token of the current source sentence is independently
// replaced by MASK with probability p. Exactly one uniform draw is consumed per
// source token, whatever p is. Contexts and target are left untouched.
TranslationExample coword_dropout(const TranslationExample& example, double p, Rng& rng);

// Uniform over {k_min, ..., k_max}.
std::size_t sample_context_size(Rng& rng, const AugmentConfig& cfg);

// One pass over every (document, sentence): draws a context size per active
// side, assembles the example, then applies CoWord dropout with cfg.coword_p.
std::vector<TranslationExample> build_training_stream(const std::vector<EncodedDocument>& docs,
                                                      const AugmentConfig& cfg, Rng& rng);

std::vector<TranslationExample> build_training_stream(const ParallelCorpus& corpus,
                                                      const Tokenizer& tok,
                                                      const AugmentConfig& cfg, Rng& rng);

}  // namespace ctxmt
