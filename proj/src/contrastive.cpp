#include "ctxmt/contrastive.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ctxmt/csv.hpp"
#include "ctxmt/cxmi.hpp"
#include "ctxmt/errors.hpp"
#include "ctxmt/parallel.hpp"

namespace ctxmt {

using nlohmann::json;

Phenomenon parse_phenomenon(std::string_view name) {
  if (name == "pronoun") return Phenomenon::kPronoun;
  if (name == "cohesion") return Phenomenon::kCohesion;
  if (name == "other") return Phenomenon::kOther;
  throw DataError("unknown phenomenon '" + std::string(name) + "' (pronoun, cohesion, other)");
}

std::string_view to_string(Phenomenon p) {
  switch (p) {
    case Phenomenon::kPronoun: return "pronoun";
    case Phenomenon::kCohesion: return "cohesion";
    case Phenomenon::kOther: break;
  }
  return "other";
}

void ContrastiveExample::validate() const {
  if (contrastive_tgts.empty()) throw DataError("contrastive example '" + example_id + "' has no contrastive candidates");
  if (std::find(contrastive_tgts.begin(), contrastive_tgts.end(), correct_tgt) != contrastive_tgts.end()) {
    throw DataError("contrastive example '" + example_id + "' lists the correct target as contrastive");
  }
}

ContrastiveFormat parse_contrastive_format(std::string_view name) {
  if (name == "simple-json") return ContrastiveFormat::kSimpleJson;
  if (name == "contrapro-json") return ContrastiveFormat::kContraProJson;
  throw ConfigError("unknown contrastive format '" + std::string(name) + "' (simple-json, contrapro-json)");
}

namespace {

std::vector<std::string> string_list(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  return j.at(key).get<std::vector<std::string>>();
}

ContrastiveExample from_simple(const json& j, std::size_t lineno) {
  ContrastiveExample ex;
  ex.example_id = j.contains("id") ? j.at("id").get<std::string>() : "line" + std::to_string(lineno);
  if (!j.contains("correct")) throw DataError("missing correct target");
  ex.src_context = string_list(j, "src_ctx");
  ex.tgt_context = string_list(j, "tgt_ctx");
  ex.src = j.at("src").get<std::string>();
  ex.correct_tgt = j.at("correct").get<std::string>();
  ex.contrastive_tgts = string_list(j, "contrastive");
  ex.phenomenon = parse_phenomenon(j.value("phenomenon", std::string("other")));
  return ex;
}

ContrastiveExample from_contrapro(const json& j, std::size_t index) {
  ContrastiveExample ex;
  if (!j.contains("ref segment")) throw DataError("missing correct target ('ref segment')");
  const auto scalar = [&](const char* key) -> std::string {
    const auto& v = j.at(key);
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  ex.example_id = j.contains("document id") && j.contains("segment id")
                      ? scalar("document id") + ":" + scalar("segment id")
                      : "record" + std::to_string(index);
  ex.src = j.at("src segment").get<std::string>();
  ex.correct_tgt = j.at("ref segment").get<std::string>();
  for (const auto& e : j.value("errors", json::array())) ex.contrastive_tgts.push_back(e.at("contrastive").get<std::string>());
  ex.src_context = string_list(j, "src context");
  ex.tgt_context = string_list(j, "ref context");
  ex.phenomenon = Phenomenon::kPronoun;
  return ex;
}

}  // namespace

std::vector<ContrastiveExample> load_contrastive(const std::filesystem::path& path,
                                                 ContrastiveFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open contrastive set " + path.string());
  std::vector<ContrastiveExample> out;
  if (format == ContrastiveFormat::kSimpleJson) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        auto ex = from_simple(json::parse(line), lineno);
        ex.validate();
        out.push_back(std::move(ex));
      } catch (const json::exception& e) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      } catch (const DataError& e) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return out;
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw DataError(path.string() + ": expected a JSON array of records");
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      auto ex = from_contrapro(doc[i], i);
      ex.validate();
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": record " + std::to_string(i) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ": record " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

void save_contrastive(const std::vector<ContrastiveExample>& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& ex : set) {
    out << json{{"id", ex.example_id},
                {"src_ctx", ex.src_context},
                {"tgt_ctx", ex.tgt_context},
                {"src", ex.src},
                {"correct", ex.correct_tgt},
                {"contrastive", ex.contrastive_tgts},
                {"phenomenon", std::string(to_string(ex.phenomenon))}}
               .dump()
        << '\n';
  }
}

TranslationExample contrastive_instance(const Tokenizer& tok, const ContrastiveExample& ex,
                                        const std::string& target, bool use_context,
                                        const ContextSpec& context) {
  TranslationExample out;
  out.src = tok.encode(ex.src);
  out.tgt = tok.encode(target);
  if (!use_context) return out;
  const auto take = [&](const std::vector<std::string>& sents, std::size_t k) {
    std::vector<TokenSeq> seqs;
    const std::size_t start = sents.size() - std::min(k, sents.size());
    for (std::size_t i = start; i < sents.size(); ++i) seqs.push_back(tok.encode(sents[i]));
    return seqs;
  };
  out.src_context = take(ex.src_context, context.source_k());
  out.tgt_context = take(ex.tgt_context, context.target_k());
  return out;
}

Ranking score_contrastive(const ScoringModel& model, const Tokenizer& tok,
                          const ContrastiveExample& ex, bool use_context,
                          const ContextSpec& context) {
  ex.validate();
  Ranking r;
  const auto score = [&](const std::string& tgt) {
    return sequence_log_prob(model, contrastive_instance(tok, ex, tgt, use_context, context));
  };
  r.ordered.push_back({0, score(ex.correct_tgt)});
  for (std::size_t i = 0; i < ex.contrastive_tgts.size(); ++i) {
    r.ordered.push_back({i + 1, score(ex.contrastive_tgts[i])});
  }
  const double correct = r.ordered[0].log_prob;
  for (std::size_t i = 1; i < r.ordered.size(); ++i) {
    if (r.ordered[i].log_prob >= correct) ++r.correct_rank;
    if (r.ordered[i].log_prob == correct) r.tie = true;
  }
  std::stable_sort(r.ordered.begin(), r.ordered.end(),
                   [](const CandidateScore& a, const CandidateScore& b) { return a.log_prob > b.log_prob; });
  return r;
}

double accuracy(const ScoringModel& model, const Tokenizer& tok,
                const std::vector<ContrastiveExample>& set, bool use_context,
                const ContextSpec& context, std::size_t threads) {
  if (set.empty()) throw ConfigError("accuracy: empty contrastive set");
  std::vector<char> hit(set.size(), 0);
  parallel_for(set.size(), threads, [&](std::size_t i) {
    hit[i] = score_contrastive(model, tok, set[i], use_context, context).correct_rank == 1;
  });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(set.size());
}

int usage_indicator(std::size_t rank_with_ctx, std::size_t rank_no_ctx) {
  return rank_with_ctx == 1 && rank_no_ctx > 1 ? 1 : 0;
}

ContrastiveResult context_usage_indicator(const ScoringModel& model, const Tokenizer& tok,
                                          const ContrastiveExample& ex, const ContextSpec& context) {
  const auto with = score_contrastive(model, tok, ex, true, context);
  const auto without = score_contrastive(model, tok, ex, false, context);
  ContrastiveResult r;
  r.example_id = ex.example_id;
  r.correct_rank_with_ctx = with.correct_rank;
  r.correct_rank_no_ctx = without.correct_rank;
  r.tie_with_ctx = with.tie;
  r.tie_no_ctx = without.tie;
  r.indicator = usage_indicator(with.correct_rank, without.correct_rank);
  r.per_sample_cxmi = per_sample_cxmi(model, contrastive_instance(tok, ex, ex.correct_tgt, true, context),
                                      contrastive_instance(tok, ex, ex.correct_tgt, false, context));
  return r;
}

ContrastiveReport evaluate_contrastive(const ScoringModel& model, const Tokenizer& tok,
                                       const std::vector<ContrastiveExample>& set,
                                       const ContextSpec& context, std::size_t threads) {
  if (set.empty()) throw ConfigError("evaluate_contrastive: empty contrastive set");
  ContrastiveReport rep;
  rep.context = context;
  rep.results.resize(set.size());
  parallel_for(set.size(), threads,
               [&](std::size_t i) { rep.results[i] = context_usage_indicator(model, tok, set[i], context); });
  std::size_t hits_ctx = 0, hits_no = 0;
  for (const auto& r : rep.results) {
    hits_ctx += r.correct_rank_with_ctx == 1;
    hits_no += r.correct_rank_no_ctx == 1;
    rep.ties_with_ctx += r.tie_with_ctx;
    rep.ties_no_ctx += r.tie_no_ctx;
  }
  const auto n = static_cast<double>(set.size());
  rep.accuracy_with_ctx = static_cast<double>(hits_ctx) / n;
  rep.accuracy_no_ctx = static_cast<double>(hits_no) / n;
  return rep;
}

json to_json(const ContrastiveReport& rep) {
  json results = json::array();
  for (const auto& r : rep.results) {
    results.push_back({{"example_id", r.example_id},
                       {"rank_with_ctx", r.correct_rank_with_ctx},
                       {"rank_no_ctx", r.correct_rank_no_ctx},
                       {"tie_with_ctx", r.tie_with_ctx},
                       {"tie_no_ctx", r.tie_no_ctx},
                       {"indicator", r.indicator},
                       {"per_sample_cxmi", r.per_sample_cxmi}});
  }
  return {{"format", "ctxmt-contrastive-v1"},
          {"context", {{"side", std::string(to_string(rep.context.side))}, {"k", rep.context.k}}},
          {"n", rep.results.size()},
          {"accuracy_with_ctx", rep.accuracy_with_ctx},
          {"accuracy_no_ctx", rep.accuracy_no_ctx},
          {"ties_with_ctx", rep.ties_with_ctx},
          {"ties_no_ctx", rep.ties_no_ctx},
          {"results", std::move(results)}};
}

namespace {
constexpr const char* kContrastiveHeader = "example_id,rank_ctx,rank_noctx,tie_ctx,tie_noctx,indicator,cxmi";
}

void write_contrastive_csv(const ContrastiveReport& report, const std::filesystem::path& path) {
  auto out = csv::create(path, "ctxmt-contrastive-v1", kContrastiveHeader);
  for (const auto& r : report.results) {
    out << csv::field(r.example_id) << ',' << r.correct_rank_with_ctx << ',' << r.correct_rank_no_ctx
        << ',' << int(r.tie_with_ctx) << ',' << int(r.tie_no_ctx) << ',' << r.indicator << ','
        << r.per_sample_cxmi << '\n';
  }
}

std::vector<ContrastiveResult> read_contrastive_csv(const std::filesystem::path& path) {
  std::vector<ContrastiveResult> out;
  for (const auto& f : csv::read(path, kContrastiveHeader)) {
    try {
      ContrastiveResult r;
      r.example_id = f[0];
      r.correct_rank_with_ctx = std::stoul(f[1]);
      r.correct_rank_no_ctx = std::stoul(f[2]);
      r.tie_with_ctx = f[3] == "1";
      r.tie_no_ctx = f[4] == "1";
      r.indicator = std::stoi(f[5]);
      r.per_sample_cxmi = std::stod(f[6]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ": malformed row for '" + f[0] + "'");
    }
  }
  return out;
}

}  // namespace ctxmt
