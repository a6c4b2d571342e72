#include "ctxmt/augment.hpp"

#include <nlohmann/json.hpp>

#include "ctxmt/errors.hpp"

namespace ctxmt {

void AugmentConfig::validate() const {
  if (!(coword_p >= 0.0 && coword_p <= 1.0)) {
    throw ConfigError("coword_p must lie in [0, 1], got " + std::to_string(coword_p));
  }
  if (k_min > k_max) {
    throw ConfigError("k_min (" + std::to_string(k_min) + ") exceeds k_max (" +
                      std::to_string(k_max) + ")");
  }
}

void to_json(nlohmann::json& j, const AugmentConfig& cfg) {
  j = nlohmann::json{{"coword_p", cfg.coword_p},
                     {"k_min", cfg.k_min},
                     {"k_max", cfg.k_max},
                     {"context_side", std::string(to_string(cfg.context_side))},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, AugmentConfig& cfg) {
  cfg.coword_p = j.value("coword_p", cfg.coword_p);
  cfg.k_min = j.value("k_min", cfg.k_min);
  cfg.k_max = j.value("k_max", cfg.k_max);
  if (j.contains("context_side")) {
    cfg.context_side = parse_context_side(j.at("context_side").get<std::string>());
  }
  cfg.seed = j.value("seed", cfg.seed);
}

TranslationExample coword_dropout(const TranslationExample& example, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("CoWord dropout probability must lie in [0, 1], got " + std::to_string(p));
  }
  TranslationExample out = example;
  for (auto& t : out.src) {
    if (rng.bernoulli(p)) t = special::kMask;
  }
  return out;
}

std::size_t sample_context_size(Rng& rng, const AugmentConfig& cfg) {
  cfg.validate();
  return static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(cfg.k_min), static_cast<std::int64_t>(cfg.k_max)));
}

std::vector<TranslationExample> build_training_stream(const std::vector<EncodedDocument>& docs,
                                                      const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  const bool use_src = cfg.context_side != ContextSide::kTarget;
  const bool use_tgt = cfg.context_side != ContextSide::kSource;
  std::vector<TranslationExample> stream;
  for (const auto& doc : docs) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const std::size_t ks = use_src ? sample_context_size(rng, cfg) : 0;
      const std::size_t kt = use_tgt ? sample_context_size(rng, cfg) : 0;
      stream.push_back(coword_dropout(assemble_example(doc, i, ks, kt), cfg.coword_p, rng));
    }
  }
  return stream;
}

std::vector<TranslationExample> build_training_stream(const ParallelCorpus& corpus,
                                                      const Tokenizer& tok,
                                                      const AugmentConfig& cfg, Rng& rng) {
  return build_training_stream(encode_corpus(corpus, tok), cfg, rng);
}

}  // namespace ctxmt
