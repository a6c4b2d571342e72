#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ctxmt/scoring_model.hpp"

namespace ctxmt {

// Upper bound on generated tokens for a source of `source_len` tokens.
inline std::size_t default_max_length(std::size_t source_len) { return 2 * source_len + 10; }

// `ex.tgt` is ignored; contexts and source are used as given. Ties between
// tokens go to the lower id. PAD, BOS, SEP, BRK and MASK are never emitted.
TokenSeq greedy_decode(const ScoringModel& model, const TranslationExample& ex, std::size_t max_len);

// Beam search on summed log-probabilities (no length normalisation), so a
// beam of one reproduces greedy_decode.
TokenSeq beam_decode(const ScoringModel& model, const TranslationExample& ex, std::size_t beam_size,
                     std::size_t max_len);

// Translates a document in order. Source context is the gold previous source
// sentences; target context is the model's own previous outputs.
std::vector<std::string> decode_document(const ScoringModel& model,
                                         const std::vector<std::string>& sources,
                                         const Tokenizer& tok, const ContextSpec& context,
                                         std::size_t beam_size);

}  // namespace ctxmt
