#include "ctxmt/corpus.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxmt/errors.hpp"

namespace ctxmt {

using nlohmann::json;

ParallelDocument::ParallelDocument(std::string doc_id, std::vector<SentencePair> pairs)
    : doc_id_(std::move(doc_id)), pairs_(std::move(pairs)) {
  if (pairs_.empty()) {
    throw DataError("document '" + doc_id_ + "' has no sentences");
  }
}

std::vector<std::string> ParallelDocument::sources() const {
  std::vector<std::string> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.source);
  return out;
}

std::vector<std::string> ParallelDocument::targets() const {
  std::vector<std::string> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.target);
  return out;
}

ParallelCorpus::ParallelCorpus(std::vector<ParallelDocument> documents)
    : documents_(std::move(documents)) {
  std::set<std::string> seen;
  for (const auto& d : documents_) {
    if (!seen.insert(d.id()).second) {
      throw DataError("duplicate doc_id '" + d.id() + "'");
    }
  }
}

std::size_t ParallelCorpus::sentence_count() const {
  std::size_t n = 0;
  for (const auto& d : documents_) n += d.size();
  return n;
}

std::pair<ParallelCorpus, ParallelCorpus> ParallelCorpus::split_every(std::size_t every) const {
  if (every < 2) throw ConfigError("split_every needs a period >= 2");
  std::vector<ParallelDocument> train, held;
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    (i % every == every - 1 ? held : train).push_back(documents_[i]);
  }
  return {ParallelCorpus(std::move(train)), ParallelCorpus(std::move(held))};
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "doc-separated-text" || name == "text") return CorpusFormat::kDocText;
  throw ConfigError("unknown corpus format '" + std::string(name) + "'");
}

namespace {

struct PendingDoc {
  std::string id;
  std::vector<std::string> src;
  std::vector<std::string> tgt;
};

ParallelDocument finish(PendingDoc&& doc) {
  if (doc.src.size() != doc.tgt.size()) {
    throw DataError("alignment error in document '" + doc.id + "': " +
                    std::to_string(doc.src.size()) + " source vs " +
                    std::to_string(doc.tgt.size()) + " target sentences");
  }
  std::vector<SentencePair> pairs;
  pairs.reserve(doc.src.size());
  for (std::size_t i = 0; i < doc.src.size(); ++i) {
    pairs.push_back({std::move(doc.src[i]), std::move(doc.tgt[i])});
  }
  return ParallelDocument(std::move(doc.id), std::move(pairs));
}

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw DataError("line " + std::to_string(line) + ": field '" + key + "' is not a string");
  }
  return it->get<std::string>();
}

ParallelCorpus load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::vector<ParallelDocument> docs;
  std::optional<PendingDoc> current;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(lineno) + ": malformed JSON (" + e.what() + ")");
    }
    if (!rec.is_object() || !rec.contains("doc_id") || !rec["doc_id"].is_string()) {
      throw DataError("line " + std::to_string(lineno) + ": record needs a string doc_id");
    }
    auto src = optional_string(rec, "src", lineno);
    auto tgt = optional_string(rec, "tgt", lineno);
    if (!src && !tgt) {
      throw DataError("line " + std::to_string(lineno) + ": record has neither src nor tgt");
    }
    auto id = rec["doc_id"].get<std::string>();
    if (!current || current->id != id) {
      if (current) docs.push_back(finish(std::move(*current)));
      current = PendingDoc{id, {}, {}};
    }
    if (src) current->src.push_back(std::move(*src));
    if (tgt) current->tgt.push_back(std::move(*tgt));
  }
  if (current) docs.push_back(finish(std::move(*current)));
  return ParallelCorpus(std::move(docs));
}

std::vector<std::vector<std::string>> read_blocks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::vector<std::vector<std::string>> blocks;
  std::vector<std::string> block;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      if (!block.empty()) blocks.push_back(std::move(block));
      block.clear();
    } else {
      block.push_back(line);
    }
  }
  if (!block.empty()) blocks.push_back(std::move(block));
  return blocks;
}

ParallelCorpus load_doc_text(const std::filesystem::path& path) {
  auto base = path;
  if (base.extension() == ".src" || base.extension() == ".tgt") base.replace_extension();
  auto src_path = base;
  src_path += ".src";
  auto tgt_path = base;
  tgt_path += ".tgt";
  auto src_blocks = read_blocks(src_path);
  auto tgt_blocks = read_blocks(tgt_path);
  if (src_blocks.size() != tgt_blocks.size()) {
    throw DataError("alignment error: " + std::to_string(src_blocks.size()) +
                    " source documents vs " + std::to_string(tgt_blocks.size()) +
                    " target documents");
  }
  std::vector<ParallelDocument> docs;
  for (std::size_t d = 0; d < src_blocks.size(); ++d) {
    docs.push_back(finish(PendingDoc{"doc" + std::to_string(d), std::move(src_blocks[d]),
                                     std::move(tgt_blocks[d])}));
  }
  return ParallelCorpus(std::move(docs));
}

}  // namespace

ParallelCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  switch (format) {
    case CorpusFormat::kJsonl:
      return load_jsonl(path);
    case CorpusFormat::kDocText:
      return load_doc_text(path);
  }
  throw ConfigError("unhandled corpus format");
}

void save_corpus_jsonl(const ParallelCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& doc : corpus.documents()) {
    for (const auto& p : doc.pairs()) {
      out << json{{"doc_id", doc.id()}, {"src", p.source}, {"tgt", p.target}}.dump() << '\n';
    }
  }
}

}  // namespace ctxmt
