#include "ctxmt/example.hpp"

#include "ctxmt/errors.hpp"

namespace ctxmt {

ContextSide parse_context_side(std::string_view name) {
  if (name == "source") return ContextSide::kSource;
  if (name == "target") return ContextSide::kTarget;
  if (name == "both") return ContextSide::kBoth;
  throw ConfigError("unknown context side '" + std::string(name) + "'");
}

std::string_view to_string(ContextSide side) {
  switch (side) {
    case ContextSide::kSource:
      return "source";
    case ContextSide::kTarget:
      return "target";
    case ContextSide::kBoth:
      return "both";
  }
  return "?";
}

EncodedDocument encode_document(const ParallelDocument& doc, const Tokenizer& tok) {
  EncodedDocument out{doc.id(), {}, {}};
  out.sources.reserve(doc.size());
  out.targets.reserve(doc.size());
  for (const auto& p : doc.pairs()) {
    out.sources.push_back(tok.encode(p.source));
    out.targets.push_back(tok.encode(p.target));
  }
  return out;
}

std::vector<EncodedDocument> encode_corpus(const ParallelCorpus& corpus, const Tokenizer& tok) {
  std::vector<EncodedDocument> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus.documents()) out.push_back(encode_document(doc, tok));
  return out;
}

TranslationExample assemble_example(const EncodedDocument& doc, std::size_t position,
                                    std::size_t k_src, std::size_t k_tgt) {
  if (position >= doc.size()) {
    throw ConfigError("sentence index " + std::to_string(position) + " out of range for document '" +
                      doc.id + "' with " + std::to_string(doc.size()) + " sentences");
  }
  TranslationExample ex;
  const std::size_t ks = std::min(k_src, position);
  const std::size_t kt = std::min(k_tgt, position);
  ex.src_context.assign(doc.sources.begin() + static_cast<std::ptrdiff_t>(position - ks),
                        doc.sources.begin() + static_cast<std::ptrdiff_t>(position));
  ex.tgt_context.assign(doc.targets.begin() + static_cast<std::ptrdiff_t>(position - kt),
                        doc.targets.begin() + static_cast<std::ptrdiff_t>(position));
  ex.src = doc.sources[position];
  ex.tgt = doc.targets[position];
  return ex;
}

TokenSeq flatten_with_context(const std::vector<TokenSeq>& context, const TokenSeq& current) {
  TokenSeq out;
  for (std::size_t c = 0; c < context.size(); ++c) {
    if (c > 0) out.push_back(special::kBrk);
    out.insert(out.end(), context[c].begin(), context[c].end());
  }
  if (!context.empty()) out.push_back(special::kSep);
  out.insert(out.end(), current.begin(), current.end());
  return out;
}

TokenSeq encoder_input(const TranslationExample& ex) {
  auto out = flatten_with_context(ex.src_context, ex.src);
  out.push_back(special::kEos);
  return out;
}

DecoderLayout decoder_layout(const TranslationExample& ex) {
  DecoderLayout layout;
  layout.input.push_back(special::kBos);
  auto flat = flatten_with_context(ex.tgt_context, ex.tgt);
  layout.input.insert(layout.input.end(), flat.begin(), flat.end());
  layout.first_scored = layout.input.size() - ex.tgt.size() - 1;
  layout.labels = ex.tgt;
  layout.labels.push_back(special::kEos);
  return layout;
}

}  // namespace ctxmt
