#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctxmt/corpus.hpp"
#include "ctxmt/random.hpp"
#include "ctxmt/scoring_model.hpp"
#include "ctxmt/tokenizer.hpp"

namespace ctxmt {

// Explicit joint table p(c, x, y) over single symbols. Sequences extend it by
// independent positions: position t of the target depends only on position t
// of the source and of the most recent context sentence.
struct EnumerationChannel {
  std::vector<std::string> context_symbols;
  std::vector<std::string> source_symbols;
  std::vector<std::string> target_symbols;
  // Flattened [c][x][y].
  std::vector<double> joint;
  // Context stream the channel's c is read from.
  ContextSide context_side = ContextSide::kTarget;

  std::size_t nc() const { return context_symbols.size(); }
  std::size_t nx() const { return source_symbols.size(); }
  std::size_t ny() const { return target_symbols.size(); }

  double p(std::size_t c, std::size_t x, std::size_t y) const {
    return joint[(c * nx() + x) * ny() + y];
  }
  double& p(std::size_t c, std::size_t x, std::size_t y) {
    return joint[(c * nx() + x) * ny() + y];
  }

  // Throws ConfigError on bad shape, negative entries or a total off 1 by > 1e-9.
  void validate() const;

  // Tokenizer with one token per symbol.
  Tokenizer make_tokenizer() const;

  // Convenience builder: p(c,x,y) = pc(c) * px(x) * cond(c, x)[y].
  template <typename Conditional>
  static EnumerationChannel build(std::vector<std::string> contexts,
                                  std::vector<std::string> sources,
                                  std::vector<std::string> targets, std::vector<double> pc,
                                  std::vector<double> px, Conditional&& cond) {
    EnumerationChannel ch{std::move(contexts), std::move(sources), std::move(targets), {}, ContextSide::kTarget};
    ch.joint.assign(ch.nc() * ch.nx() * ch.ny(), 0.0);
    for (std::size_t c = 0; c < ch.nc(); ++c) {
      for (std::size_t x = 0; x < ch.nx(); ++x) {
        const std::vector<double> py = cond(c, x);
        for (std::size_t y = 0; y < ch.ny(); ++y) ch.p(c, x, y) = pc[c] * px[x] * py[y];
      }
    }
    ch.validate();
    return ch;
  }
};

void to_json(nlohmann::json& j, const EnumerationChannel& ch);
void from_json(const nlohmann::json& j, EnumerationChannel& ch);

// Exact conditionals of a channel behind the scoring contract. The context
// symbol at position t comes from the last sentence on the channel's context
// side; a missing or unknown context symbol (or an empty context) is
// marginalised out, as is a MASKed source token. Tokens with probability zero
// score -infinity.
class EnumerationModel : public ScoringModel {
 public:
  explicit EnumerationModel(EnumerationChannel channel);

  std::string_view kind() const override { return "enumeration"; }
  std::size_t vocab_size() const override { return tokenizer_.vocab_size(); }
  LogProbMatrix log_distributions(const TranslationExample& ex) const override;

  const EnumerationChannel& channel() const { return channel_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }

  // Target-symbol distribution for one position; c or x may be npos for
  // "unobserved". Throws NumericalError if the conditioning event has
  // probability zero.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<double> conditional(std::size_t c, std::size_t x) const;

 private:
  EnumerationChannel channel_;
  Tokenizer tokenizer_;
  std::vector<std::size_t> context_index_;  // token id -> context symbol or npos
  std::vector<std::size_t> source_index_;
  std::vector<TokenId> target_ids_;
};

// Draws `length` i.i.d. symbol triples; the context becomes one sentence on
// the channel's context side.
TranslationExample sample_channel_example(const EnumerationModel& model, std::size_t length,
                                          Rng& rng);

// Documents of two sentences: the first carries the context on its context
// side (with a source sentence drawn from the source marginal), the second is
// the (x, y) pair drawn jointly with it.
ParallelCorpus sample_channel_corpus(const EnumerationChannel& ch, std::size_t documents,
                                     std::size_t length, Rng& rng);

}  // namespace ctxmt
