#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctxmt/example.hpp"
#include "ctxmt/scoring_model.hpp"

namespace ctxmt {

enum class Phenomenon { kPronoun, kCohesion, kOther };
Phenomenon parse_phenomenon(std::string_view name);
std::string_view to_string(Phenomenon p);

struct ContrastiveExample {
  std::string example_id;
  std::vector<std::string> src_context;  // oldest first
  std::vector<std::string> tgt_context;
  std::string src;
  std::string correct_tgt;
  std::vector<std::string> contrastive_tgts;
  Phenomenon phenomenon = Phenomenon::kOther;

  // Throws DataError when there is no contrastive candidate or the correct
  // target is among them.
  void validate() const;
};

enum class ContrastiveFormat { kSimpleJson, kContraProJson };
ContrastiveFormat parse_contrastive_format(std::string_view name);

// simple-json: one object per line with src_ctx, tgt_ctx, src, correct,
// contrastive, phenomenon and an optional id.
// contrapro-json: a JSON array of records using the public field names
// ("src segment", "ref segment", "errors"[].contrastive, "document id",
// "segment id") plus optional "src context"/"ref context" sentence lists.
std::vector<ContrastiveExample> load_contrastive(const std::filesystem::path& path,
                                                 ContrastiveFormat format);
void save_contrastive(const std::vector<ContrastiveExample>& set, const std::filesystem::path& path);

struct CandidateScore {
  std::size_t candidate = 0;  // 0 = correct, i = contrastive_tgts[i - 1]
  double log_prob = 0.0;
};

struct Ranking {
  std::vector<CandidateScore> ordered;  // best first; equal scores keep input order
  std::size_t correct_rank = 1;         // 1 + #contrastive scoring >= correct
  bool tie = false;                     // some contrastive candidate scored exactly the same
};

// The example as the model sees it for one candidate target: the last k
// context sentences on the chosen side(s), none when use_context is false.
TranslationExample contrastive_instance(const Tokenizer& tok, const ContrastiveExample& ex,
                                        const std::string& target, bool use_context,
                                        const ContextSpec& context);

// Candidates ranked by total sequence log-probability (target tokens + EOS).
Ranking score_contrastive(const ScoringModel& model, const Tokenizer& tok,
                          const ContrastiveExample& ex, bool use_context,
                          const ContextSpec& context);

// Fraction of examples whose correct candidate ranks strictly first.
// Throws ConfigError on an empty set.
double accuracy(const ScoringModel& model, const Tokenizer& tok,
                const std::vector<ContrastiveExample>& set, bool use_context,
                const ContextSpec& context, std::size_t threads = 1);

struct ContrastiveResult {
  std::string example_id;
  std::size_t correct_rank_with_ctx = 1;
  std::size_t correct_rank_no_ctx = 1;
  bool tie_with_ctx = false;
  bool tie_no_ctx = false;
  int indicator = 0;  // 1 iff ranked first with context and not without
  double per_sample_cxmi = 0.0;
};

// Pure function of the two ranks.
int usage_indicator(std::size_t rank_with_ctx, std::size_t rank_no_ctx);

ContrastiveResult context_usage_indicator(const ScoringModel& model, const Tokenizer& tok,
                                          const ContrastiveExample& ex, const ContextSpec& context);

struct ContrastiveReport {
  ContextSpec context;
  double accuracy_with_ctx = 0.0;
  double accuracy_no_ctx = 0.0;
  std::size_t ties_with_ctx = 0;
  std::size_t ties_no_ctx = 0;
  std::vector<ContrastiveResult> results;
};

ContrastiveReport evaluate_contrastive(const ScoringModel& model, const Tokenizer& tok,
                                       const std::vector<ContrastiveExample>& set,
                                       const ContextSpec& context, std::size_t threads = 1);

nlohmann::json to_json(const ContrastiveReport& report);

// "# ctxmt-contrastive-v1" then
// example_id,rank_ctx,rank_noctx,tie_ctx,tie_noctx,indicator,cxmi
void write_contrastive_csv(const ContrastiveReport& report, const std::filesystem::path& path);
std::vector<ContrastiveResult> read_contrastive_csv(const std::filesystem::path& path);

}  // namespace ctxmt
