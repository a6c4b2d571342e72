#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ctxmt {

class ParallelCorpus;

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// Reserved ids, identical in every vocabulary.
namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kSep = 3;
inline constexpr TokenId kBrk = 4;
inline constexpr TokenId kMask = 5;
inline constexpr TokenId kUnk = 6;
inline constexpr TokenId kCount = 7;
}  // namespace special

// Byte-pair encoding over Unicode code points with an end-of-word marker.
// Text is split on whitespace; the last symbol of every word carries "</w>",
// so decode() reproduces single-spaced text exactly.
class Tokenizer {
 public:
  static constexpr std::string_view kEndOfWord = "</w>";

  // Learns merges from both sides of the corpus. Most frequent pair wins,
  // ties go to the lexicographically smallest (left, right) pair. Merging
  // stops at vocab_size or when no pair occurs at least twice.
  static Tokenizer train(const ParallelCorpus& corpus, std::size_t vocab_size);
  static Tokenizer train(std::span<const std::string> texts, std::size_t vocab_size);

  // Vocabulary where every given word is a single token (no learning).
  static Tokenizer for_words(std::span<const std::string> words);

  static Tokenizer from_json(const nlohmann::json& j);
  static Tokenizer load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  TokenSeq encode(std::string_view text) const;
  // Throws DataError on an id outside the vocabulary. PAD/BOS/EOS are
  // skipped; other specials render as their glyph.
  std::string decode(std::span<const TokenId> ids) const;

  std::size_t vocab_size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }

  // FNV-1a over the serialized form; stored in checkpoints.
  std::uint64_t fingerprint() const;

 private:
  Tokenizer(std::vector<std::string> alphabet,
            std::vector<std::pair<std::string, std::string>> merges);

  std::vector<std::string> alphabet_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::map<std::pair<std::string, std::string>, std::size_t> merge_rank_;
};

// Splits UTF-8 text into code points (invalid bytes become single-byte units).
std::vector<std::string> split_code_points(std::string_view text);

}  // namespace ctxmt
