#include "ctxmt/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxmt/corpus.hpp"
#include "ctxmt/errors.hpp"

namespace ctxmt {

using nlohmann::json;

namespace {

constexpr std::string_view kFormatTag = "ctxmt-bpe-v1";

const std::array<std::string, special::kCount> kSpecialNames = {
    "<pad>", "<s>", "</s>", "<sep>", "<brk>", "<mask>", "<unk>"};

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::vector<std::string> word_symbols(std::string_view word) {
  auto symbols = split_code_points(word);
  if (!symbols.empty()) symbols.back() += Tokenizer::kEndOfWord;
  return symbols;
}

void apply_merge(std::vector<std::string>& symbols, const std::string& left,
                 const std::string& right) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      ++i;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols = std::move(out);
}

}  // namespace

std::vector<std::string> split_code_points(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Tokenizer::Tokenizer(std::vector<std::string> alphabet,
                     std::vector<std::pair<std::string, std::string>> merges)
    : alphabet_(std::move(alphabet)), merges_(std::move(merges)) {
  auto add = [this](const std::string& tok) {
    if (ids_.contains(tok)) return;
    ids_.emplace(tok, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(tok);
  };
  for (const auto& name : kSpecialNames) add(name);
  for (const auto& c : alphabet_) {
    add(c);
    add(c + std::string(kEndOfWord));
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& [a, b] = merges_[r];
    if (!ids_.contains(a) || !ids_.contains(b)) {
      throw DataError("merge (" + a + ", " + b + ") uses a symbol outside the vocabulary");
    }
    merge_rank_.emplace(merges_[r], r);
    add(a + b);
  }
}

Tokenizer Tokenizer::train(const ParallelCorpus& corpus, std::size_t vocab_size) {
  std::vector<std::string> texts;
  texts.reserve(2 * corpus.sentence_count());
  for (const auto& doc : corpus.documents()) {
    for (const auto& p : doc.pairs()) {
      texts.push_back(p.source);
      texts.push_back(p.target);
    }
  }
  return train(texts, vocab_size);
}

Tokenizer Tokenizer::train(std::span<const std::string> texts, std::size_t vocab_size) {
  std::map<std::string, std::size_t> word_counts;
  std::set<std::string> chars;
  for (const auto& text : texts) {
    for (auto& w : split_words(text)) {
      for (auto& c : split_code_points(w)) chars.insert(std::move(c));
      ++word_counts[std::move(w)];
    }
  }
  std::vector<std::string> alphabet(chars.begin(), chars.end());
  const std::size_t base = special::kCount + 2 * alphabet.size();
  if (vocab_size <= special::kCount || vocab_size < base) {
    throw ConfigError("vocab_size " + std::to_string(vocab_size) +
                      " is too small: specials and base symbols alone need " +
                      std::to_string(base));
  }

  struct WordEntry {
    std::vector<std::string> symbols;
    std::size_t count;
  };
  std::vector<WordEntry> words;
  words.reserve(word_counts.size());
  for (const auto& [w, n] : word_counts) words.push_back({word_symbols(w), n});

  std::vector<std::pair<std::string, std::string>> merges;
  std::set<std::string> vocab;
  for (const auto& c : alphabet) {
    vocab.insert(c);
    vocab.insert(c + std::string(kEndOfWord));
  }
  std::size_t size = base;
  while (size < vocab_size) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        pair_counts[{w.symbols[i], w.symbols[i + 1]}] += w.count;
      }
    }
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    const std::pair<std::string, std::string>* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [pair, n] : pair_counts) {
      if (n > best_count) {
        best = &pair;
        best_count = n;
      }
    }
    if (best == nullptr || best_count < 2) break;
    auto merge = *best;
    for (auto& w : words) apply_merge(w.symbols, merge.first, merge.second);
    if (vocab.insert(merge.first + merge.second).second) ++size;
    merges.push_back(std::move(merge));
  }
  return Tokenizer(std::move(alphabet), std::move(merges));
}

Tokenizer Tokenizer::for_words(std::span<const std::string> words) {
  std::set<std::string> chars;
  for (const auto& w : words) {
    auto parts = split_words(w);
    if (parts.size() != 1 || parts.front() != w) {
      throw ConfigError("symbol '" + w + "' must be a non-empty word without whitespace");
    }
    for (auto& c : split_code_points(w)) chars.insert(std::move(c));
  }
  // Each word is first reduced by the merges already present (lower ranks
  // fire first when encoding), then joined left to right with new merges.
  std::vector<std::pair<std::string, std::string>> merges;
  std::map<std::pair<std::string, std::string>, std::size_t> rank;
  for (const auto& w : words) {
    auto symbols = word_symbols(w);
    while (symbols.size() > 1) {
      std::size_t best = merges.size();
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        auto it = rank.find({symbols[i], symbols[i + 1]});
        if (it != rank.end() && it->second < best) best = it->second;
      }
      if (best == merges.size()) break;
      apply_merge(symbols, merges[best].first, merges[best].second);
    }
    while (symbols.size() > 1) {
      std::pair<std::string, std::string> m{symbols[0], symbols[1]};
      if (rank.emplace(m, merges.size()).second) merges.push_back(m);
      symbols[0] += symbols[1];
      symbols.erase(symbols.begin() + 1);
    }
  }
  Tokenizer tok(std::vector<std::string>(chars.begin(), chars.end()), std::move(merges));
  for (const auto& w : words) {
    if (tok.encode(w).size() != 1) {
      throw ConfigError("symbol set is not prefix-consistent: '" + w + "' splits");
    }
  }
  return tok;
}

TokenSeq Tokenizer::encode(std::string_view text) const {
  TokenSeq ids;
  for (const auto& w : split_words(text)) {
    auto symbols = word_symbols(w);
    while (symbols.size() > 1) {
      std::size_t best_rank = merges_.size();
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        auto it = merge_rank_.find({symbols[i], symbols[i + 1]});
        if (it != merge_rank_.end() && it->second < best_rank) best_rank = it->second;
      }
      if (best_rank == merges_.size()) break;
      const auto& [a, b] = merges_[best_rank];
      apply_merge(symbols, a, b);
    }
    for (const auto& s : symbols) {
      auto it = ids_.find(s);
      ids.push_back(it == ids_.end() ? special::kUnk : it->second);
    }
  }
  return ids;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw DataError("token id " + std::to_string(id) + " is outside the vocabulary of size " +
                      std::to_string(tokens_.size()));
    }
    if (id == special::kPad || id == special::kBos || id == special::kEos) continue;
    if (id < special::kCount) {
      out += tokens_[static_cast<std::size_t>(id)];
      out += ' ';
      continue;
    }
    const auto& tok = tokens_[static_cast<std::size_t>(id)];
    if (tok.size() >= kEndOfWord.size() &&
        std::string_view(tok).substr(tok.size() - kEndOfWord.size()) == kEndOfWord) {
      out.append(tok, 0, tok.size() - kEndOfWord.size());
      out += ' ';
    } else {
      out += tok;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

const std::string& Tokenizer::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " is outside the vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Tokenizer::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

json Tokenizer::to_json() const {
  json specials = json::object();
  for (TokenId i = 0; i < special::kCount; ++i) specials[kSpecialNames[static_cast<std::size_t>(i)]] = i;
  json merges = json::array();
  for (const auto& [a, b] : merges_) merges.push_back({a, b});
  return json{{"format", kFormatTag},
              {"alphabet", alphabet_},
              {"merges", std::move(merges)},
              {"specials", std::move(specials)}};
}

Tokenizer Tokenizer::from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormatTag) {
      throw DataError("unsupported tokenizer format '" + j.at("format").get<std::string>() + "'");
    }
    const auto& specials = j.at("specials");
    for (TokenId i = 0; i < special::kCount; ++i) {
      if (specials.at(kSpecialNames[static_cast<std::size_t>(i)]).get<TokenId>() != i) {
        throw DataError("tokenizer file has non-standard special ids");
      }
    }
    std::vector<std::pair<std::string, std::string>> merges;
    for (const auto& m : j.at("merges")) {
      merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
    }
    return Tokenizer(j.at("alphabet").get<std::vector<std::string>>(), std::move(merges));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed tokenizer JSON: ") + e.what());
  }
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tokenizer file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("tokenizer file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void Tokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump(1) << '\n';
}

std::uint64_t Tokenizer::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace ctxmt
