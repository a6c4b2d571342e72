#include "ctxmt/enumeration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ctxmt/errors.hpp"

namespace ctxmt {

using nlohmann::json;

void EnumerationChannel::validate() const {
  if (nc() == 0 || nx() == 0 || ny() == 0) {
    throw ConfigError("enumeration channel needs non-empty alphabets");
  }
  if (joint.size() != nc() * nx() * ny()) {
    throw ConfigError("joint table has " + std::to_string(joint.size()) + " entries, expected " +
                      std::to_string(nc() * nx() * ny()));
  }
  double total = 0.0;
  for (double v : joint) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("joint table entries must be >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("joint table sums to " + std::to_string(total) + ", not 1");
  }
}

Tokenizer EnumerationChannel::make_tokenizer() const {
  std::vector<std::string> words;
  auto add = [&](const std::vector<std::string>& symbols) {
    for (const auto& s : symbols) {
      if (std::find(words.begin(), words.end(), s) == words.end()) words.push_back(s);
    }
  };
  add(context_symbols);
  add(source_symbols);
  add(target_symbols);
  return Tokenizer::for_words(words);
}

void to_json(json& j, const EnumerationChannel& ch) {
  j = json{{"context", ch.context_symbols},
           {"source", ch.source_symbols},
           {"target", ch.target_symbols},
           {"context_side", std::string(to_string(ch.context_side))},
           {"joint", ch.joint}};
}

void from_json(const json& j, EnumerationChannel& ch) {
  try {
    ch.context_symbols = j.at("context").get<std::vector<std::string>>();
    ch.source_symbols = j.at("source").get<std::vector<std::string>>();
    ch.target_symbols = j.at("target").get<std::vector<std::string>>();
    ch.context_side = parse_context_side(j.value("context_side", std::string("target")));
    const auto& table = j.at("joint");
    ch.joint.clear();
    // Accept either a flat list or nested [c][x][y] arrays.
    std::function<void(const json&)> flatten = [&](const json& node) {
      if (node.is_array()) {
        for (const auto& v : node) flatten(v);
      } else {
        ch.joint.push_back(node.get<double>());
      }
    };
    flatten(table);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed channel JSON: ") + e.what());
  }
  ch.validate();
}

EnumerationModel::EnumerationModel(EnumerationChannel channel)
    : channel_(std::move(channel)), tokenizer_(channel_.make_tokenizer()) {
  channel_.validate();
  const std::size_t v = tokenizer_.vocab_size();
  context_index_.assign(v, npos);
  source_index_.assign(v, npos);
  for (std::size_t c = 0; c < channel_.nc(); ++c) {
    context_index_[static_cast<std::size_t>(tokenizer_.encode(channel_.context_symbols[c]).front())] = c;
  }
  for (std::size_t x = 0; x < channel_.nx(); ++x) {
    source_index_[static_cast<std::size_t>(tokenizer_.encode(channel_.source_symbols[x]).front())] = x;
  }
  for (const auto& y : channel_.target_symbols) target_ids_.push_back(tokenizer_.encode(y).front());
}

std::vector<double> EnumerationModel::conditional(std::size_t c, std::size_t x) const {
  const auto& ch = channel_;
  std::vector<double> py(ch.ny(), 0.0);
  for (std::size_t ci = 0; ci < ch.nc(); ++ci) {
    if (c != npos && ci != c) continue;
    for (std::size_t xi = 0; xi < ch.nx(); ++xi) {
      if (x != npos && xi != x) continue;
      for (std::size_t y = 0; y < ch.ny(); ++y) py[y] += ch.p(ci, xi, y);
    }
  }
  const double mass = std::accumulate(py.begin(), py.end(), 0.0);
  if (!(mass > 0.0)) {
    throw NumericalError("conditioning event has probability zero (c=" +
                         (c == npos ? std::string("*") : ch.context_symbols[c]) + ", x=" +
                         (x == npos ? std::string("*") : ch.source_symbols[x]) + ")");
  }
  for (double& p : py) p /= mass;
  return py;
}

LogProbMatrix EnumerationModel::log_distributions(const TranslationExample& ex) const {
  const auto v = static_cast<Eigen::Index>(vocab_size());
  const auto rows = static_cast<Eigen::Index>(ex.tgt.size() + 1);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  LogProbMatrix out = LogProbMatrix::Constant(rows, v, kNegInf);

  const auto& contexts =
      channel_.context_side == ContextSide::kSource ? ex.src_context : ex.tgt_context;
  const TokenSeq* context = contexts.empty() ? nullptr : &contexts.back();

  for (Eigen::Index t = 0; t < rows; ++t) {
    const auto pos = static_cast<std::size_t>(t);
    if (pos >= ex.src.size()) {
      out(t, special::kEos) = 0.0;
      continue;
    }
    const TokenId xt = ex.src[pos];
    std::size_t x = npos;
    if (xt != special::kMask) {
      if (xt < 0 || static_cast<std::size_t>(xt) >= source_index_.size() ||
          source_index_[static_cast<std::size_t>(xt)] == npos) {
        throw DataError("source token " + std::to_string(xt) + " is not a channel source symbol");
      }
      x = source_index_[static_cast<std::size_t>(xt)];
    }
    std::size_t c = npos;
    if (context != nullptr && pos < context->size()) {
      const TokenId ct = (*context)[pos];
      if (ct >= 0 && static_cast<std::size_t>(ct) < context_index_.size()) {
        c = context_index_[static_cast<std::size_t>(ct)];
      }
    }
    const auto py = conditional(c, x);
    for (std::size_t y = 0; y < py.size(); ++y) {
      if (py[y] > 0.0) out(t, target_ids_[y]) = std::log(py[y]);
    }
  }
  return out;
}

namespace {

std::size_t draw(const std::vector<double>& weights, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

struct Triple {
  std::size_t c, x, y;
};

Triple draw_triple(const EnumerationChannel& ch, Rng& rng) {
  const std::size_t flat = draw(ch.joint, rng);
  return {flat / (ch.nx() * ch.ny()), (flat / ch.ny()) % ch.nx(), flat % ch.ny()};
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

TranslationExample sample_channel_example(const EnumerationModel& model, std::size_t length,
                                          Rng& rng) {
  const auto& ch = model.channel();
  const auto& tok = model.tokenizer();
  TranslationExample ex;
  TokenSeq context;
  for (std::size_t t = 0; t < length; ++t) {
    const auto [c, x, y] = draw_triple(ch, rng);
    context.push_back(tok.encode(ch.context_symbols[c]).front());
    ex.src.push_back(tok.encode(ch.source_symbols[x]).front());
    ex.tgt.push_back(tok.encode(ch.target_symbols[y]).front());
  }
  if (ch.context_side == ContextSide::kSource) {
    ex.src_context.push_back(std::move(context));
  } else {
    ex.tgt_context.push_back(std::move(context));
  }
  return ex;
}

ParallelCorpus sample_channel_corpus(const EnumerationChannel& ch, std::size_t documents,
                                     std::size_t length, Rng& rng) {
  ch.validate();
  std::vector<double> px(ch.nx(), 0.0), py(ch.ny(), 0.0);
  for (std::size_t c = 0; c < ch.nc(); ++c) {
    for (std::size_t x = 0; x < ch.nx(); ++x) {
      for (std::size_t y = 0; y < ch.ny(); ++y) {
        px[x] += ch.p(c, x, y);
        py[y] += ch.p(c, x, y);
      }
    }
  }
  std::vector<ParallelDocument> docs;
  docs.reserve(documents);
  for (std::size_t d = 0; d < documents; ++d) {
    std::vector<std::string> cs, xs, ys, other;
    for (std::size_t t = 0; t < length; ++t) {
      const auto [c, x, y] = draw_triple(ch, rng);
      cs.push_back(ch.context_symbols[c]);
      xs.push_back(ch.source_symbols[x]);
      ys.push_back(ch.target_symbols[y]);
    }
    SentencePair carrier;
    if (ch.context_side == ContextSide::kSource) {
      for (std::size_t t = 0; t < length; ++t) other.push_back(ch.target_symbols[draw(py, rng)]);
      carrier = {join(cs), join(other)};
    } else {
      for (std::size_t t = 0; t < length; ++t) other.push_back(ch.source_symbols[draw(px, rng)]);
      carrier = {join(other), join(cs)};
    }
    docs.emplace_back("ch" + std::to_string(d),
                      std::vector<SentencePair>{std::move(carrier), {join(xs), join(ys)}});
  }
  return ParallelCorpus(std::move(docs));
}

}  // namespace ctxmt
