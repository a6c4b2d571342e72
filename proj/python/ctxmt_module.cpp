#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ctxmt/augment.hpp"
#include "ctxmt/checkpoint.hpp"
#include "ctxmt/cli.hpp"
#include "ctxmt/contrastive.hpp"
#include "ctxmt/corpus.hpp"
#include "ctxmt/cxmi.hpp"
#include "ctxmt/decoding.hpp"
#include "ctxmt/enumeration.hpp"
#include "ctxmt/errors.hpp"
#include "ctxmt/random.hpp"
#include "ctxmt/stats.hpp"
#include "ctxmt/synthetic.hpp"
#include "ctxmt/tokenizer.hpp"

namespace py = pybind11;
using namespace ctxmt;

namespace {

// Reports cross the boundary as JSON text; the Python wrapper parses them.
std::string dump(const nlohmann::json& j) { return j.dump(); }

ContextSpec spec(const std::string& side, std::size_t k) { return {parse_context_side(side), k}; }

struct Model {
  std::shared_ptr<const ScoringModel> impl;
  std::optional<Tokenizer> tokenizer;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the ctxmt toolkit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Tokenizer>(m, "Tokenizer")
      .def_static("load", &Tokenizer::load, py::arg("path"))
      .def_static("for_words", [](const std::vector<std::string>& w) { return Tokenizer::for_words(w); },
                  py::arg("words"))
      .def_static("train", [](const std::vector<std::string>& texts, std::size_t n) { return Tokenizer::train(texts, n); },
                  py::arg("texts"), py::arg("vocab_size"))
      .def("save", &Tokenizer::save, py::arg("path"))
      .def("encode", &Tokenizer::encode, py::arg("text"))
      .def("decode", [](const Tokenizer& t, const TokenSeq& ids) { return t.decode(ids); }, py::arg("ids"))
      .def("token", &Tokenizer::token, py::arg("id"))
      .def_property_readonly("vocab_size", &Tokenizer::vocab_size);

  py::class_<ParallelCorpus>(m, "Corpus")
      .def_static("load",
                  [](const std::filesystem::path& p, const std::string& fmt) {
                    return load_corpus(p, parse_corpus_format(fmt));
                  },
                  py::arg("path"), py::arg("format") = "jsonl")
      .def_static("from_documents",
                  [](const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>& docs) {
                    std::vector<ParallelDocument> out;
                    for (const auto& [id, pairs] : docs) {
                      std::vector<SentencePair> sp;
                      for (const auto& [s, t] : pairs) sp.push_back({s, t});
                      out.emplace_back(id, std::move(sp));
                    }
                    return ParallelCorpus(std::move(out));
                  },
                  py::arg("documents"))
      .def("save_jsonl", [](const ParallelCorpus& c, const std::filesystem::path& p) { save_corpus_jsonl(c, p); })
      .def("documents",
           [](const ParallelCorpus& c) {
             std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> out;
             for (const auto& d : c.documents()) {
               std::vector<std::pair<std::string, std::string>> pairs;
               for (const auto& p : d.pairs()) pairs.emplace_back(p.source, p.target);
               out.emplace_back(d.id(), std::move(pairs));
             }
             return out;
           })
      .def("__len__", &ParallelCorpus::size)
      .def_property_readonly("sentence_count", &ParallelCorpus::sentence_count);

  py::class_<TranslationExample>(m, "Example")
      .def(py::init([](TokenSeq src, TokenSeq tgt, std::vector<TokenSeq> src_ctx, std::vector<TokenSeq> tgt_ctx) {
             return TranslationExample{std::move(src_ctx), std::move(tgt_ctx), std::move(src), std::move(tgt)};
           }),
           py::arg("src"), py::arg("tgt"), py::arg("src_context") = std::vector<TokenSeq>{},
           py::arg("tgt_context") = std::vector<TokenSeq>{})
      .def_readwrite("src", &TranslationExample::src)
      .def_readwrite("tgt", &TranslationExample::tgt)
      .def_readwrite("src_context", &TranslationExample::src_context)
      .def_readwrite("tgt_context", &TranslationExample::tgt_context)
      .def("__eq__", [](const TranslationExample& a, const TranslationExample& b) { return a == b; });

  m.def("coword_dropout",
        [](const TranslationExample& ex, double p, std::uint64_t seed) {
          Rng rng(seed);
          return coword_dropout(ex, p, rng);
        },
        py::arg("example"), py::arg("p"), py::arg("seed"),
        "Masks each current-source token with probability p (MASK id 5).");

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& mo) { return std::string(mo.impl->kind()); })
      .def_property_readonly("vocab_size", [](const Model& mo) { return mo.impl->vocab_size(); })
      .def_property_readonly("tokenizer", [](const Model& mo) { return mo.tokenizer; })
      .def("score", [](const Model& mo, const TranslationExample& ex) { return mo.impl->score(ex); },
           py::arg("example"), "log q(y_t | ...) for every target token and the final EOS")
      .def("translate",
           [](const Model& mo, const std::vector<std::string>& sources, const Tokenizer& tok,
              const std::string& side, std::size_t k, std::size_t beam) {
             return decode_document(*mo.impl, sources, tok, spec(side, k), beam);
           },
           py::arg("sources"), py::arg("tokenizer"), py::arg("side") = "target", py::arg("k") = 1,
           py::arg("beam") = 1);

  m.def("load_checkpoint",
        [](const std::filesystem::path& p) {
          auto l = load_checkpoint(p);
          return Model{l.model, l.tokenizer};
        },
        py::arg("path"));

  m.def("enumeration_model",
        [](const std::string& channel_json) {
          auto ch = nlohmann::json::parse(channel_json).get<EnumerationChannel>();
          EnumerationModel em(ch);
          return Model{std::make_shared<EnumerationModel>(em), em.tokenizer()};
        },
        py::arg("channel_json"));

  m.def("true_cmi", [](const std::string& channel_json) {
    return true_cmi(nlohmann::json::parse(channel_json).get<EnumerationChannel>());
  });

  m.def("corpus_cxmi",
        [](const Model& mo, const ParallelCorpus& corpus, const Tokenizer& tok, const std::string& side,
           std::size_t k, bool per_word, std::size_t threads) {
          CxmiOptions o;
          o.per_word = per_word;
          o.threads = threads;
          py::gil_scoped_release nogil;
          return dump(to_json(corpus_cxmi(*mo.impl, corpus, tok, spec(side, k), o)));
        },
        py::arg("model"), py::arg("corpus"), py::arg("tokenizer"), py::arg("side") = "target", py::arg("k") = 1,
        py::arg("per_word") = false, py::arg("threads") = 1);

  m.def("cxmi_sweep",
        [](const Model& mo, const ParallelCorpus& corpus, const Tokenizer& tok, const std::string& side,
           std::size_t k_max, std::size_t threads) {
          CxmiOptions o;
          o.threads = threads;
          py::gil_scoped_release nogil;
          return dump(to_json(cxmi_sweep(*mo.impl, corpus, tok, parse_context_side(side), k_max, std::nullopt, o)));
        },
        py::arg("model"), py::arg("corpus"), py::arg("tokenizer"), py::arg("side") = "target",
        py::arg("k_max") = 4, py::arg("threads") = 1);

  m.def("evaluate_contrastive",
        [](const Model& mo, const Tokenizer& tok, const std::filesystem::path& path, const std::string& format,
           const std::string& side, std::size_t k) {
          const auto set = load_contrastive(path, parse_contrastive_format(format));
          py::gil_scoped_release nogil;
          return dump(to_json(evaluate_contrastive(*mo.impl, tok, set, spec(side, k))));
        },
        py::arg("model"), py::arg("tokenizer"), py::arg("path"), py::arg("format") = "simple-json",
        py::arg("side") = "target", py::arg("k") = 1);

  m.def("point_biserial",
        [](const std::vector<double>& v, const std::vector<int>& labels) { return dump(to_json(point_biserial(v, labels))); },
        py::arg("values"), py::arg("labels"));

  m.def("bleu", &bleu, py::arg("hypotheses"), py::arg("references"));

  m.def("make_pronoun_corpus",
        [](std::size_t documents, std::uint64_t seed) {
          PronounTaskConfig c;
          c.documents = documents;
          c.seed = seed;
          return make_pronoun_corpus(c);
        },
        py::arg("documents") = 5000, py::arg("seed") = 1);
  m.def("pronoun_task_words", [] { return pronoun_task_words(); });

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release nogil;
            code = cli::run(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs one ctxmt command line; returns (exit_code, stdout, stderr).");
}
