#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ctxmt/corpus.hpp"
#include "ctxmt/tokenizer.hpp"

namespace ctxmt {

enum class ContextSide { kSource, kTarget, kBoth };

ContextSide parse_context_side(std::string_view name);
std::string_view to_string(ContextSide side);

// Which context a pass sees: k previous sentences on the given side(s).
struct ContextSpec {
  ContextSide side = ContextSide::kTarget;
  std::size_t k = 0;

  std::size_t source_k() const { return side == ContextSide::kTarget ? 0 : k; }
  std::size_t target_k() const { return side == ContextSide::kSource ? 0 : k; }
};

// One scoring/training instance. Context lists hold the previous sentences
// in document order (oldest first); their lengths are the effective sizes.
struct TranslationExample {
  std::vector<TokenSeq> src_context;
  std::vector<TokenSeq> tgt_context;
  TokenSeq src;
  TokenSeq tgt;

  std::size_t src_ctx_size() const { return src_context.size(); }
  std::size_t tgt_ctx_size() const { return tgt_context.size(); }
  bool has_context() const { return !src_context.empty() || !tgt_context.empty(); }

  // Same current sentence pair with both contexts removed.
  TranslationExample without_context() const { return {{}, {}, src, tgt}; }

  bool operator==(const TranslationExample&) const = default;
};

struct EncodedDocument {
  std::string id;
  std::vector<TokenSeq> sources;
  std::vector<TokenSeq> targets;

  std::size_t size() const { return sources.size(); }
};

EncodedDocument encode_document(const ParallelDocument& doc, const Tokenizer& tok);
std::vector<EncodedDocument> encode_corpus(const ParallelCorpus& corpus, const Tokenizer& tok);

// Example for sentence `position` (0-based). Contexts hold the
// min(k, position) immediately preceding sentences. Throws ConfigError when
// position is outside the document.
TranslationExample assemble_example(const EncodedDocument& doc, std::size_t position,
                                    std::size_t k_src, std::size_t k_tgt);

// ctx_1 BRK ctx_2 BRK ... ctx_k SEP current; just `current` without context.
TokenSeq flatten_with_context(const std::vector<TokenSeq>& context, const TokenSeq& current);

// Encoder stream: flattened source side followed by EOS.
TokenSeq encoder_input(const TranslationExample& ex);

// Decoder stream: BOS, flattened target side (no trailing EOS). Predictions
// from index `first_scored` onward are the target tokens followed by EOS.
struct DecoderLayout {
  TokenSeq input;
  std::size_t first_scored = 0;
  TokenSeq labels;  // len(tgt) + 1, aligned with input[first_scored..]
};
DecoderLayout decoder_layout(const TranslationExample& ex);

}  // namespace ctxmt
