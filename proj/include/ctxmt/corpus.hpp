#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ctxmt {

struct SentencePair {
  std::string source;
  std::string target;

  bool operator==(const SentencePair&) const = default;
};

// A sentence-aligned document. Sentence order is document order.
class ParallelDocument {
 public:
  // Throws DataError if pairs is empty.
  ParallelDocument(std::string doc_id, std::vector<SentencePair> pairs);

  const std::string& id() const { return doc_id_; }
  const std::vector<SentencePair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  const SentencePair& operator[](std::size_t i) const { return pairs_[i]; }

  std::vector<std::string> sources() const;
  std::vector<std::string> targets() const;

  bool operator==(const ParallelDocument&) const = default;

 private:
  std::string doc_id_;
  std::vector<SentencePair> pairs_;
};

class ParallelCorpus {
 public:
  ParallelCorpus() = default;
  // Throws DataError on duplicate document ids.
  explicit ParallelCorpus(std::vector<ParallelDocument> documents);

  const std::vector<ParallelDocument>& documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }
  const ParallelDocument& operator[](std::size_t i) const { return documents_[i]; }

  std::size_t sentence_count() const;

  // Splits off every `every`-th document (by position) as a held-out set.
  std::pair<ParallelCorpus, ParallelCorpus> split_every(std::size_t every) const;

  bool operator==(const ParallelCorpus&) const = default;

 private:
  std::vector<ParallelDocument> documents_;
};

enum class CorpusFormat { kJsonl, kDocText };

CorpusFormat parse_corpus_format(std::string_view name);

// jsonl: one {"doc_id","src","tgt"} object per line, documents are runs of
// consecutive lines sharing doc_id. kDocText: `path` names either the common
// prefix or the .src file of a parallel .src/.tgt pair, one sentence per line,
// blank line between documents.
ParallelCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

void save_corpus_jsonl(const ParallelCorpus& corpus, const std::filesystem::path& path);

}  // namespace ctxmt
