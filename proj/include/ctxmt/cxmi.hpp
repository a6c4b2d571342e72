#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctxmt/enumeration.hpp"
#include "ctxmt/scoring_model.hpp"

namespace ctxmt {

// All quantities in nats.

// mean(b - a): cross-entropy of pass A minus that of pass B.
double info_gain(std::span<const double> logprobs_a, std::span<const double> logprobs_b);

// Component t is log q(y_t | x, y_<t, C) - log q(y_t | x, y_<t, no context),
// over the target tokens and the final EOS. Throws DataError if the two
// examples differ in their current sentences. Identical inputs give exact
// zeros without scoring twice.
std::vector<double> per_word_cxmi(const ScoringModel& model, const TranslationExample& with_ctx,
                                  const TranslationExample& no_ctx);

double per_sample_cxmi(const ScoringModel& model, const TranslationExample& with_ctx,
                       const TranslationExample& no_ctx);

struct LabeledExample {
  std::string id;
  TranslationExample example;  // contextual pass; the agnostic pass strips context
};

struct SampleCxmi {
  std::string example_id;
  double cxmi = 0.0;
  std::size_t tokens = 0;
};

struct WordCxmi {
  std::string example_id;
  std::size_t position = 0;
  TokenId token = 0;
  double cxmi = 0.0;
};

struct CxmiReport {
  double corpus_cxmi = 0.0;     // mean over sentences
  double std_error = 0.0;       // sample std of per-sample values / sqrt(n)
  double per_token_cxmi = 0.0;  // total over all tokens / token count (comparability only)
  std::optional<double> bootstrap_std_error;
  std::size_t n = 0;
  std::size_t tokens = 0;
  ContextSpec context;
  std::vector<SampleCxmi> per_sample;
  std::vector<WordCxmi> per_word;  // empty unless requested
  std::vector<std::string> warnings;
};

struct CxmiOptions {
  bool per_word = false;
  bool bootstrap = false;
  std::size_t bootstrap_samples = 1000;
  std::uint64_t bootstrap_seed = 1;
  std::size_t threads = 1;
};

// Scores each example with its context and without, then aggregates.
CxmiReport estimate_cxmi(const ScoringModel& model, const std::vector<LabeledExample>& examples,
                         const ContextSpec& context, const CxmiOptions& options = {});

// Every sentence of the corpus with k previous gold sentences on `side`.
// Example ids are "<doc_id>:<index>".
std::vector<LabeledExample> corpus_examples(const std::vector<EncodedDocument>& docs,
                                            const ContextSpec& context);

CxmiReport corpus_cxmi(const ScoringModel& model, const ParallelCorpus& corpus,
                       const Tokenizer& tok, const ContextSpec& context,
                       const CxmiOptions& options = {});

struct SweepPoint {
  std::size_t k = 0;
  double cxmi = 0.0;
  double std_error = 0.0;
};

struct SweepCurve {
  ContextSide side = ContextSide::kTarget;
  std::vector<SweepPoint> points;  // k = 0..k_max; k = 0 is exactly zero
  std::vector<std::string> warnings;
};

// Context-agnostic scores are computed once per sentence and shared by every
// k. A warning is recorded when k_max exceeds `trained_k_max`.
SweepCurve cxmi_sweep(const ScoringModel& model, const ParallelCorpus& corpus, const Tokenizer& tok,
                      ContextSide side, std::size_t k_max,
                      std::optional<std::size_t> trained_k_max = std::nullopt,
                      const CxmiOptions& options = {});

// Exact conditional mutual information I(C; Y | X) of the channel, by
// enumeration over single-symbol triples.
double true_cmi(const EnumerationChannel& ch);

nlohmann::json to_json(const CxmiReport& report);
CxmiReport cxmi_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepCurve& curve);

// Flat CSVs with a versioned "# ..." header line.
void write_cxmi_csv(const CxmiReport& report, const std::filesystem::path& path);
void write_word_cxmi_csv(const CxmiReport& report, const Tokenizer* tok,
                         const std::filesystem::path& path);
void write_sweep_csv(const SweepCurve& curve, const std::filesystem::path& path);
std::vector<SampleCxmi> read_cxmi_csv(const std::filesystem::path& path);

}  // namespace ctxmt
