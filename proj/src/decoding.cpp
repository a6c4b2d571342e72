#include "ctxmt/decoding.hpp"

#include <algorithm>
#include <cmath>

#include "ctxmt/errors.hpp"

namespace ctxmt {

namespace {

bool emittable(TokenId id) {
  return id != special::kPad && id != special::kBos && id != special::kSep &&
         id != special::kBrk && id != special::kMask;
}

Eigen::RowVectorXd next_log_probs(const ScoringModel& model, const TranslationExample& base,
                                  const TokenSeq& prefix) {
  TranslationExample ex{base.src_context, base.tgt_context, base.src, prefix};
  const LogProbMatrix dist = model.log_distributions(ex);
  return dist.row(dist.rows() - 1);
}

}  // namespace

TokenSeq greedy_decode(const ScoringModel& model, const TranslationExample& ex, std::size_t max_len) {
  TokenSeq out;
  while (out.size() < max_len) {
    const auto lp = next_log_probs(model, ex, out);
    TokenId best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (Eigen::Index v = 0; v < lp.size(); ++v) {
      const auto id = static_cast<TokenId>(v);
      if (emittable(id) && lp(v) > best_score) {
        best = id;
        best_score = lp(v);
      }
    }
    if (best < 0 || best == special::kEos) break;
    out.push_back(best);
  }
  return out;
}

TokenSeq beam_decode(const ScoringModel& model, const TranslationExample& ex, std::size_t beam_size,
                     std::size_t max_len) {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  struct Hyp {
    TokenSeq tokens;
    double score = 0.0;
    bool finished = false;
  };
  std::vector<Hyp> beams{Hyp{}};
  for (std::size_t len = 0; len < max_len; ++len) {
    if (std::all_of(beams.begin(), beams.end(), [](const Hyp& h) { return h.finished; })) break;
    std::vector<Hyp> candidates;
    for (const auto& h : beams) {
      if (h.finished) {
        candidates.push_back(h);
        continue;
      }
      const auto lp = next_log_probs(model, ex, h.tokens);
      for (Eigen::Index v = 0; v < lp.size(); ++v) {
        const auto id = static_cast<TokenId>(v);
        if (!emittable(id) || !std::isfinite(lp(v))) continue;
        Hyp next{h.tokens, h.score + lp(v), id == special::kEos};
        if (!next.finished) next.tokens.push_back(id);
        candidates.push_back(std::move(next));
      }
    }
    if (candidates.empty()) break;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Hyp& a, const Hyp& b) { return a.score > b.score; });
    if (candidates.size() > beam_size) candidates.resize(beam_size);
    beams = std::move(candidates);
  }
  return beams.front().tokens;
}

std::vector<std::string> decode_document(const ScoringModel& model,
                                         const std::vector<std::string>& sources,
                                         const Tokenizer& tok, const ContextSpec& context,
                                         std::size_t beam_size) {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  std::vector<TokenSeq> src_ids, out_ids;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    src_ids.push_back(tok.encode(sources[i]));
    TranslationExample ex;
    const std::size_t ks = std::min(context.source_k(), i);
    const std::size_t kt = std::min(context.target_k(), i);
    ex.src_context.assign(src_ids.end() - 1 - static_cast<std::ptrdiff_t>(ks), src_ids.end() - 1);
    ex.tgt_context.assign(out_ids.end() - static_cast<std::ptrdiff_t>(kt), out_ids.end());
    ex.src = src_ids.back();
    const auto max_len = default_max_length(ex.src.size());
    TokenSeq hyp = beam_size == 1 ? greedy_decode(model, ex, max_len)
                                  : beam_decode(model, ex, beam_size, max_len);
    out.push_back(tok.decode(hyp));
    out_ids.push_back(std::move(hyp));
  }
  return out;
}

}  // namespace ctxmt
