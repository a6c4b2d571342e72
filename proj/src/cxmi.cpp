#include "ctxmt/cxmi.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "ctxmt/csv.hpp"
#include "ctxmt/errors.hpp"
#include "ctxmt/parallel.hpp"
#include "ctxmt/random.hpp"
#include "ctxmt/summation.hpp"

namespace ctxmt {

using nlohmann::json;

namespace {

void check_same_current(const TranslationExample& a, const TranslationExample& b) {
  if (a.src != b.src || a.tgt != b.tgt) {
    throw DataError("contextual and context-agnostic examples differ in their current sentences");
  }
}

std::vector<double> difference(const std::vector<double>& with, const std::vector<double>& without) {
  std::vector<double> out(with.size());
  for (std::size_t t = 0; t < with.size(); ++t) out[t] = with[t] - without[t];
  return out;
}

struct Moments {
  double mean = 0.0;
  double std_error = 0.0;
};

Moments mean_and_error(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  m.mean = compensated_sum(values) / n;
  if (values.size() > 1) {
    CompensatedSum ss;
    for (double v : values) ss.add((v - m.mean) * (v - m.mean));
    m.std_error = std::sqrt(ss.value() / (n - 1.0)) / std::sqrt(n);
  }
  return m;
}

double bootstrap_error(std::span<const double> values, std::size_t samples, std::uint64_t seed) {
  if (values.size() < 2 || samples < 2) return 0.0;
  Rng rng(seed);
  std::vector<double> means(samples);
  const auto last = static_cast<std::int64_t>(values.size() - 1);
  for (auto& m : means) {
    CompensatedSum s;
    for (std::size_t i = 0; i < values.size(); ++i) s.add(values[static_cast<std::size_t>(rng.uniform_int(0, last))]);
    m = s.value() / static_cast<double>(values.size());
  }
  const auto mm = mean_and_error(means);
  return mm.std_error * std::sqrt(static_cast<double>(samples));
}

}  // namespace

double info_gain(std::span<const double> logprobs_a, std::span<const double> logprobs_b) {
  if (logprobs_a.size() != logprobs_b.size()) {
    throw DataError("info_gain: length mismatch (" + std::to_string(logprobs_a.size()) + " vs " +
                    std::to_string(logprobs_b.size()) + ")");
  }
  if (logprobs_a.empty()) return 0.0;
  CompensatedSum s;
  for (std::size_t i = 0; i < logprobs_a.size(); ++i) s.add(logprobs_b[i] - logprobs_a[i]);
  return s.value() / static_cast<double>(logprobs_a.size());
}

std::vector<double> per_word_cxmi(const ScoringModel& model, const TranslationExample& with_ctx,
                                  const TranslationExample& no_ctx) {
  check_same_current(with_ctx, no_ctx);
  if (with_ctx == no_ctx) return std::vector<double>(with_ctx.tgt.size() + 1, 0.0);
  return difference(model.score(with_ctx), model.score(no_ctx));
}

double per_sample_cxmi(const ScoringModel& model, const TranslationExample& with_ctx,
                       const TranslationExample& no_ctx) {
  return compensated_sum(per_word_cxmi(model, with_ctx, no_ctx));
}

CxmiReport estimate_cxmi(const ScoringModel& model, const std::vector<LabeledExample>& examples,
                         const ContextSpec& context, const CxmiOptions& options) {
  std::vector<std::vector<double>> words(examples.size());
  parallel_for(examples.size(), options.threads, [&](std::size_t i) {
    const auto& ex = examples[i].example;
    words[i] = per_word_cxmi(model, ex, ex.without_context());
  });

  CxmiReport report;
  report.context = context;
  report.n = examples.size();
  std::vector<double> samples(examples.size());
  CompensatedSum token_total;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    samples[i] = compensated_sum(words[i]);
    report.per_sample.push_back({examples[i].id, samples[i], words[i].size()});
    report.tokens += words[i].size();
    for (double w : words[i]) token_total.add(w);
    if (options.per_word) {
      const auto& tgt = examples[i].example.tgt;
      for (std::size_t t = 0; t < words[i].size(); ++t) {
        const TokenId tok = t < tgt.size() ? tgt[t] : special::kEos;
        report.per_word.push_back({examples[i].id, t, tok, words[i][t]});
      }
    }
  }
  const auto m = mean_and_error(samples);
  report.corpus_cxmi = m.mean;
  report.std_error = m.std_error;
  report.per_token_cxmi =
      report.tokens == 0 ? 0.0 : token_total.value() / static_cast<double>(report.tokens);
  if (options.bootstrap) {
    report.bootstrap_std_error =
        bootstrap_error(samples, options.bootstrap_samples, options.bootstrap_seed);
  }
  return report;
}

std::vector<LabeledExample> corpus_examples(const std::vector<EncodedDocument>& docs,
                                            const ContextSpec& context) {
  std::vector<LabeledExample> out;
  for (const auto& doc : docs) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out.push_back({doc.id + ":" + std::to_string(i),
                     assemble_example(doc, i, context.source_k(), context.target_k())});
    }
  }
  return out;
}

CxmiReport corpus_cxmi(const ScoringModel& model, const ParallelCorpus& corpus,
                       const Tokenizer& tok, const ContextSpec& context,
                       const CxmiOptions& options) {
  return estimate_cxmi(model, corpus_examples(encode_corpus(corpus, tok), context), context, options);
}

SweepCurve cxmi_sweep(const ScoringModel& model, const ParallelCorpus& corpus, const Tokenizer& tok,
                      ContextSide side, std::size_t k_max, std::optional<std::size_t> trained_k_max,
                      const CxmiOptions& options) {
  SweepCurve curve;
  curve.side = side;
  if (trained_k_max && k_max > *trained_k_max) {
    curve.warnings.push_back("k_max " + std::to_string(k_max) +
                             " exceeds the context sizes seen in training (max " +
                             std::to_string(*trained_k_max) + ")");
  }
  const auto docs = encode_corpus(corpus, tok);
  const auto base = corpus_examples(docs, ContextSpec{side, 0});
  std::vector<std::vector<double>> agnostic(base.size());
  parallel_for(base.size(), options.threads,
               [&](std::size_t i) { agnostic[i] = model.score(base[i].example); });

  curve.points.push_back({0, 0.0, 0.0});
  for (std::size_t k = 1; k <= k_max; ++k) {
    const auto examples = corpus_examples(docs, ContextSpec{side, k});
    std::vector<double> samples(examples.size(), 0.0);
    parallel_for(examples.size(), options.threads, [&](std::size_t i) {
      const auto& ex = examples[i].example;
      if (!ex.has_context()) return;
      samples[i] = compensated_sum(difference(model.score(ex), agnostic[i]));
    });
    const auto m = mean_and_error(samples);
    curve.points.push_back({k, m.mean, m.std_error});
  }
  return curve;
}

double true_cmi(const EnumerationChannel& ch) {
  ch.validate();
  CompensatedSum total;
  for (std::size_t x = 0; x < ch.nx(); ++x) {
    double px = 0.0;
    std::vector<double> pxy(ch.ny(), 0.0);
    for (std::size_t c = 0; c < ch.nc(); ++c) {
      for (std::size_t y = 0; y < ch.ny(); ++y) {
        pxy[y] += ch.p(c, x, y);
        px += ch.p(c, x, y);
      }
    }
    if (px <= 0.0) continue;
    for (std::size_t c = 0; c < ch.nc(); ++c) {
      double pcx = 0.0;
      for (std::size_t y = 0; y < ch.ny(); ++y) pcx += ch.p(c, x, y);
      if (pcx <= 0.0) continue;
      for (std::size_t y = 0; y < ch.ny(); ++y) {
        const double pj = ch.p(c, x, y);
        if (pj <= 0.0) continue;
        total.add(pj * std::log((pj / pcx) / (pxy[y] / px)));
      }
    }
  }
  return total.value();
}

json to_json(const CxmiReport& r) {
  json samples = json::array();
  for (const auto& s : r.per_sample) {
    samples.push_back({{"example_id", s.example_id}, {"cxmi", s.cxmi}, {"tokens", s.tokens}});
  }
  json j{{"format", "ctxmt-cxmi-report-v1"},
         {"corpus_cxmi", r.corpus_cxmi},
         {"std_error", r.std_error},
         {"per_token_cxmi", r.per_token_cxmi},
         {"n", r.n},
         {"tokens", r.tokens},
         {"context", {{"side", std::string(to_string(r.context.side))}, {"k", r.context.k}}},
         {"per_sample", std::move(samples)},
         {"warnings", r.warnings}};
  if (r.bootstrap_std_error) j["bootstrap_std_error"] = *r.bootstrap_std_error;
  if (!r.per_word.empty()) {
    json words = json::array();
    for (const auto& w : r.per_word) {
      words.push_back({{"example_id", w.example_id},
                       {"position", w.position},
                       {"token", w.token},
                       {"cxmi", w.cxmi}});
    }
    j["per_word"] = std::move(words);
  }
  return j;
}

CxmiReport cxmi_report_from_json(const json& j) {
  try {
    CxmiReport r;
    r.corpus_cxmi = j.at("corpus_cxmi").get<double>();
    r.std_error = j.at("std_error").get<double>();
    r.per_token_cxmi = j.at("per_token_cxmi").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.tokens = j.at("tokens").get<std::size_t>();
    r.context.side = parse_context_side(j.at("context").at("side").get<std::string>());
    r.context.k = j.at("context").at("k").get<std::size_t>();
    for (const auto& s : j.at("per_sample")) {
      r.per_sample.push_back({s.at("example_id").get<std::string>(), s.at("cxmi").get<double>(),
                              s.at("tokens").get<std::size_t>()});
    }
    if (j.contains("per_word")) {
      for (const auto& w : j.at("per_word")) {
        r.per_word.push_back({w.at("example_id").get<std::string>(), w.at("position").get<std::size_t>(),
                              w.at("token").get<TokenId>(), w.at("cxmi").get<double>()});
      }
    }
    if (j.contains("bootstrap_std_error")) r.bootstrap_std_error = j.at("bootstrap_std_error").get<double>();
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed CXMI report: ") + e.what());
  }
}

json to_json(const SweepCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"k", p.k}, {"cxmi", p.cxmi}, {"std_error", p.std_error}});
  }
  return json{{"format", "ctxmt-sweep-v1"},
              {"side", std::string(to_string(curve.side))},
              {"points", std::move(points)},
              {"warnings", curve.warnings}};
}

void write_cxmi_csv(const CxmiReport& report, const std::filesystem::path& path) {
  auto out = csv::create(path, "ctxmt-cxmi-v1", "example_id,k,side,cxmi");
  for (const auto& s : report.per_sample) {
    out << csv::field(s.example_id) << ',' << report.context.k << ',' << to_string(report.context.side)
        << ',' << s.cxmi << '\n';
  }
}

void write_word_cxmi_csv(const CxmiReport& report, const Tokenizer* tok,
                         const std::filesystem::path& path) {
  auto out = csv::create(path, "ctxmt-cxmi-words-v1", "example_id,position,token,k,side,cxmi");
  for (const auto& w : report.per_word) {
    out << csv::field(w.example_id) << ',' << w.position << ','
        << csv::field(tok != nullptr ? tok->token(w.token) : std::to_string(w.token)) << ','
        << report.context.k << ',' << to_string(report.context.side) << ',' << w.cxmi << '\n';
  }
}

void write_sweep_csv(const SweepCurve& curve, const std::filesystem::path& path) {
  auto out = csv::create(path, "ctxmt-sweep-v1", "k,side,cxmi,std_error");
  for (const auto& p : curve.points) {
    out << p.k << ',' << to_string(curve.side) << ',' << p.cxmi << ',' << p.std_error << '\n';
  }
}

std::vector<SampleCxmi> read_cxmi_csv(const std::filesystem::path& path) {
  std::vector<SampleCxmi> out;
  for (const auto& f : csv::read(path, "example_id,k,side,cxmi")) {
    try {
      out.push_back({f[0], std::stod(f[3]), 0});
    } catch (const std::exception&) {
      throw DataError(path.string() + ": bad cxmi value '" + f[3] + "' for " + f[0]);
    }
  }
  return out;
}

}  // namespace ctxmt
