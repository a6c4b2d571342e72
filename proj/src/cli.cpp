#include "ctxmt/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ctxmt/checkpoint.hpp"
#include "ctxmt/contrastive.hpp"
#include "ctxmt/corpus.hpp"
#include "ctxmt/cxmi.hpp"
#include "ctxmt/decoding.hpp"
#include "ctxmt/errors.hpp"
#include "ctxmt/random.hpp"
#include "ctxmt/stats.hpp"
#include "ctxmt/synthetic.hpp"
#include "ctxmt/tokenizer.hpp"

namespace ctxmt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  model.validate();
  train.validate();
  augment.validate();
  if (eval.beam == 0) throw ConfigError("eval.beam must be at least 1");
  if (eval.threads == 0) throw ConfigError("eval.threads must be at least 1");
  if (vocab_size <= special::kCount) throw ConfigError("vocab_size is too small");
  if (paths.output_dir.empty()) throw ConfigError("paths.output_dir must not be empty");
}

void to_json(json& j, const ExperimentConfig& cfg) {
  const auto& p = cfg.paths;
  const auto& e = cfg.eval;
  j = json{{"paths",
            {{"corpus", p.corpus},
             {"corpus_format", p.corpus_format},
             {"valid", p.valid},
             {"tokenizer", p.tokenizer},
             {"checkpoint", p.checkpoint},
             {"output_dir", p.output_dir},
             {"contrastive", p.contrastive},
             {"contrastive_format", p.contrastive_format}}},
           {"tokenizer", {{"vocab_size", cfg.vocab_size}}},
           {"model", cfg.model},
           {"train", cfg.train},
           {"augment", cfg.augment},
           {"eval",
            {{"side", std::string(to_string(e.side))},
             {"k", e.k},
             {"k_max", e.k_max},
             {"beam", e.beam},
             {"per_word", e.per_word},
             {"bootstrap", e.bootstrap},
             {"bootstrap_samples", e.bootstrap_samples},
             {"seed", e.seed},
             {"threads", e.threads},
             {"preview", e.preview}}}};
}

void from_json(const json& j, ExperimentConfig& cfg) {
  static const std::set<std::string> sections{"paths", "tokenizer", "model", "train", "augment", "eval"};
  for (const auto& [key, _] : j.items()) {
    if (!sections.contains(key)) throw ConfigError("unknown config section '" + key + "'");
  }
  if (j.contains("paths")) {
    const auto& s = j.at("paths");
    auto& p = cfg.paths;
    p.corpus = s.value("corpus", p.corpus);
    p.corpus_format = s.value("corpus_format", p.corpus_format);
    p.valid = s.value("valid", p.valid);
    p.tokenizer = s.value("tokenizer", p.tokenizer);
    p.checkpoint = s.value("checkpoint", p.checkpoint);
    p.output_dir = s.value("output_dir", p.output_dir);
    p.contrastive = s.value("contrastive", p.contrastive);
    p.contrastive_format = s.value("contrastive_format", p.contrastive_format);
  }
  if (j.contains("tokenizer")) cfg.vocab_size = j.at("tokenizer").value("vocab_size", cfg.vocab_size);
  if (j.contains("model")) j.at("model").get_to(cfg.model);
  if (j.contains("train")) j.at("train").get_to(cfg.train);
  if (j.contains("augment")) j.at("augment").get_to(cfg.augment);
  if (j.contains("eval")) {
    const auto& s = j.at("eval");
    auto& e = cfg.eval;
    if (s.contains("side")) e.side = parse_context_side(s.at("side").get<std::string>());
    e.k = s.value("k", e.k);
    e.k_max = s.value("k_max", e.k_max);
    e.beam = s.value("beam", e.beam);
    e.per_word = s.value("per_word", e.per_word);
    e.bootstrap = s.value("bootstrap", e.bootstrap);
    e.bootstrap_samples = s.value("bootstrap_samples", e.bootstrap_samples);
    e.seed = s.value("seed", e.seed);
    e.threads = s.value("threads", e.threads);
    e.preview = s.value("preview", e.preview);
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  ExperimentConfig cfg;
  try {
    from_json(json::parse(in), cfg);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return cfg;
}

void save_experiment_config(const ExperimentConfig& cfg, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << json(cfg).dump(2) << '\n';
}

namespace {

// Flag values; each one set on the command line overrides the config file.
struct Overrides {
  std::string config;
  std::optional<std::string> corpus, corpus_format, valid, tokenizer, checkpoint, output_dir;
  std::optional<std::string> dataset, dataset_format, side;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k, k_max, beam, threads, preview, vocab_size, max_steps;
  std::optional<double> coword_p;
  bool per_word = false;
  bool bootstrap = false;
  bool no_context = false;
  // command-specific
  std::string cxmi_file, indicator_file, input, references;
  std::size_t documents = 5000;
  std::size_t pairs = 200;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = load_experiment_config(o.config);
  auto& p = cfg.paths;
  if (o.corpus) p.corpus = *o.corpus;
  if (o.corpus_format) p.corpus_format = *o.corpus_format;
  if (o.valid) p.valid = *o.valid;
  if (o.tokenizer) p.tokenizer = *o.tokenizer;
  if (o.checkpoint) p.checkpoint = *o.checkpoint;
  if (o.output_dir) p.output_dir = *o.output_dir;
  if (o.dataset) p.contrastive = *o.dataset;
  if (o.dataset_format) p.contrastive_format = *o.dataset_format;
  if (o.side) {
    cfg.eval.side = parse_context_side(*o.side);
    cfg.augment.context_side = cfg.eval.side;
  }
  if (o.seed) cfg.train.seed = cfg.augment.seed = cfg.eval.seed = *o.seed;
  if (o.k) cfg.eval.k = *o.k;
  if (o.k_max) cfg.eval.k_max = *o.k_max;
  if (o.beam) cfg.eval.beam = *o.beam;
  if (o.threads) cfg.eval.threads = *o.threads;
  if (o.preview) cfg.eval.preview = *o.preview;
  if (o.vocab_size) cfg.vocab_size = *o.vocab_size;
  if (o.max_steps) cfg.train.max_steps = *o.max_steps;
  if (o.coword_p) cfg.augment.coword_p = *o.coword_p;
  if (o.per_word) cfg.eval.per_word = true;
  if (o.bootstrap) cfg.eval.bootstrap = true;
  if (o.no_context) cfg.eval.k = 0;
  cfg.validate();
  return cfg;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path is not set");
  if (!fs::is_regular_file(path)) throw ConfigError(what + " not found: " + path);
}

fs::path output_dir(const ExperimentConfig& cfg) {
  fs::path dir = cfg.paths.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

fs::path checkpoint_path(const ExperimentConfig& cfg) {
  return cfg.paths.checkpoint.empty() ? fs::path(cfg.paths.output_dir) / "model.json"
                                      : fs::path(cfg.paths.checkpoint);
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_lines(const std::vector<std::string>& lines, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

ParallelCorpus load_main_corpus(const ExperimentConfig& cfg) {
  require_file(cfg.paths.corpus, "corpus");
  return load_corpus(cfg.paths.corpus, parse_corpus_format(cfg.paths.corpus_format));
}

struct Model {
  LoadedModel loaded;
  Tokenizer tok;
};

Model load_model(const ExperimentConfig& cfg) {
  const fs::path ckpt = checkpoint_path(cfg);
  require_file(ckpt.string(), "checkpoint");
  LoadedModel loaded = load_checkpoint(ckpt);
  if (loaded.tokenizer) return {loaded, *loaded.tokenizer};
  require_file(cfg.paths.tokenizer, "tokenizer");
  Tokenizer tok = Tokenizer::load(cfg.paths.tokenizer);
  if (tok.fingerprint() != loaded.tokenizer_fingerprint) {
    throw ConfigError("tokenizer " + cfg.paths.tokenizer + " does not match checkpoint " + ckpt.string());
  }
  return {loaded, tok};
}

CxmiOptions cxmi_options(const ExperimentConfig& cfg) {
  CxmiOptions o;
  o.per_word = cfg.eval.per_word;
  o.bootstrap = cfg.eval.bootstrap;
  o.bootstrap_samples = cfg.eval.bootstrap_samples;
  o.bootstrap_seed = cfg.eval.seed;
  o.threads = cfg.eval.threads;
  return o;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// ---- commands -----------------------------------------------------------

void cmd_make_tokenizer(const ExperimentConfig& cfg, std::ostream& out) {
  const auto corpus = load_main_corpus(cfg);
  const fs::path dest = cfg.paths.tokenizer.empty() ? output_dir(cfg) / "tokenizer.json"
                                                    : fs::path(cfg.paths.tokenizer);
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  const auto tok = Tokenizer::train(corpus, cfg.vocab_size);
  tok.save(dest);
  out << "tokenizer: " << tok.vocab_size() << " tokens -> " << dest.string() << '\n';
}

void cmd_synth(const ExperimentConfig& cfg, const Overrides& o, std::ostream& out) {
  const fs::path dir = output_dir(cfg);
  PronounTaskConfig pc;
  pc.documents = o.documents;
  pc.seed = cfg.train.seed;
  const auto corpus = make_pronoun_corpus(pc);
  save_corpus_jsonl(corpus, dir / "corpus.jsonl");
  save_contrastive(make_pronoun_contrastive_set(o.pairs, cfg.train.seed + 1, pc), dir / "contrastive.jsonl");
  const auto words = pronoun_task_words(pc);
  Tokenizer::for_words(words).save(dir / "tokenizer.json");
  out << "synthetic pronoun task: " << corpus.size() << " documents, " << 2 * o.pairs
      << " contrastive examples -> " << dir.string() << '\n';
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  const auto corpus = load_main_corpus(cfg);
  std::optional<ParallelCorpus> valid;
  if (!cfg.paths.valid.empty()) {
    require_file(cfg.paths.valid, "validation corpus");
    valid = load_corpus(cfg.paths.valid, parse_corpus_format(cfg.paths.corpus_format));
  }
  const fs::path dir = output_dir(cfg);
  std::optional<Tokenizer> tok;
  if (!cfg.paths.tokenizer.empty()) {
    require_file(cfg.paths.tokenizer, "tokenizer");
    tok = Tokenizer::load(cfg.paths.tokenizer);
  } else {
    tok = Tokenizer::train(corpus, cfg.vocab_size);
    tok->save(dir / "tokenizer.json");
  }
  TrainResult res = valid ? train(corpus, *valid, *tok, cfg.model, cfg.train, cfg.augment)
                          : train(corpus, *tok, cfg.model, cfg.train, cfg.augment);
  const fs::path ckpt = checkpoint_path(cfg);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(res.model, *tok, cfg.augment, ckpt);
  write_train_log(res.log, dir / "train_log.csv");
  out << "trained " << res.steps << " steps, best validation perplexity " << res.best_valid_ppl
      << " at step " << res.best_step << " -> " << ckpt.string() << '\n';
}

void cmd_cxmi(const ExperimentConfig& cfg, std::ostream& out) {
  const auto m = load_model(cfg);
  const auto corpus = load_main_corpus(cfg);
  const ContextSpec ctx{cfg.eval.side, cfg.eval.k};
  const auto report = corpus_cxmi(*m.loaded.model, corpus, m.tok, ctx, cxmi_options(cfg));
  const fs::path dir = output_dir(cfg);
  write_json(to_json(report), dir / "cxmi.json");
  write_cxmi_csv(report, dir / "cxmi.csv");
  if (cfg.eval.per_word) write_word_cxmi_csv(report, &m.tok, dir / "cxmi_words.csv");
  out << "CXMI(k=" << ctx.k << ", " << to_string(ctx.side) << ") = " << report.corpus_cxmi
      << " +- " << report.std_error << " nats over " << report.n << " sentences\n";
}

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  const auto m = load_model(cfg);
  const auto corpus = load_main_corpus(cfg);
  std::optional<std::size_t> trained_k;
  if (m.loaded.trained_with) trained_k = m.loaded.trained_with->k_max;
  const auto curve = cxmi_sweep(*m.loaded.model, corpus, m.tok, cfg.eval.side, cfg.eval.k_max,
                                trained_k, cxmi_options(cfg));
  const fs::path dir = output_dir(cfg);
  write_json(to_json(curve), dir / "sweep.json");
  write_sweep_csv(curve, dir / "sweep.csv");
  for (const auto& pt : curve.points) out << "k=" << pt.k << "  CXMI " << pt.cxmi << '\n';
  for (const auto& w : curve.warnings) out << "warning: " << w << '\n';
}

void cmd_contrastive(const ExperimentConfig& cfg, std::ostream& out) {
  const auto m = load_model(cfg);
  require_file(cfg.paths.contrastive, "contrastive dataset");
  const auto set = load_contrastive(cfg.paths.contrastive,
                                    parse_contrastive_format(cfg.paths.contrastive_format));
  const ContextSpec ctx{cfg.eval.side, cfg.eval.k};
  const auto report = evaluate_contrastive(*m.loaded.model, m.tok, set, ctx, cfg.eval.threads);
  const fs::path dir = output_dir(cfg);
  write_json(to_json(report), dir / "contrastive.json");
  write_contrastive_csv(report, dir / "contrastive.csv");
  out << "accuracy with context " << report.accuracy_with_ctx << ", without "
      << report.accuracy_no_ctx << " (" << set.size() << " examples)\n";
}

// Per-sample CXMI from either a cxmi CSV or a contrastive CSV.
std::vector<SampleCxmi> read_cxmi_values(const fs::path& path) {
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  if (first.rfind("# ctxmt-contrastive-", 0) == 0) {
    std::vector<SampleCxmi> v;
    for (const auto& r : read_contrastive_csv(path)) v.push_back({r.example_id, r.per_sample_cxmi, 0});
    return v;
  }
  return read_cxmi_csv(path);
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? ", " : "") + ids[i];
  if (ids.size() > 20) s += ", ... (" + std::to_string(ids.size()) + " in total)";
  return s;
}

void cmd_correlate(const ExperimentConfig& cfg, const Overrides& o, std::ostream& out) {
  require_file(o.cxmi_file, "cxmi file");
  require_file(o.indicator_file, "indicator file");
  const auto values = read_cxmi_values(o.cxmi_file);
  const auto indicators = read_contrastive_csv(o.indicator_file);
  std::map<std::string, double> by_id;
  for (const auto& v : values) {
    if (!by_id.emplace(v.example_id, v.cxmi).second) {
      throw DataError("duplicate example id '" + v.example_id + "' in " + o.cxmi_file);
    }
  }
  std::vector<double> x;
  std::vector<int> labels;
  std::vector<std::string> missing_cxmi;
  std::set<std::string> seen;
  for (const auto& r : indicators) {
    if (!seen.insert(r.example_id).second) {
      throw DataError("duplicate example id '" + r.example_id + "' in " + o.indicator_file);
    }
    auto it = by_id.find(r.example_id);
    if (it == by_id.end()) {
      missing_cxmi.push_back(r.example_id);
      continue;
    }
    x.push_back(it->second);
    labels.push_back(r.indicator);
  }
  std::vector<std::string> missing_ind;
  for (const auto& [id, _] : by_id) {
    if (!seen.contains(id)) missing_ind.push_back(id);
  }
  if (!missing_cxmi.empty() || !missing_ind.empty()) {
    std::string msg = "example ids do not join.";
    if (!missing_cxmi.empty()) msg += " Missing from " + o.cxmi_file + ": " + join_ids(missing_cxmi) + ".";
    if (!missing_ind.empty()) msg += " Missing from " + o.indicator_file + ": " + join_ids(missing_ind) + ".";
    throw DataError(msg);
  }
  CorrelationResult res;
  try {
    res = point_biserial(x, labels);
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) +
                    " -- the correlation needs both indicator classes and varying CXMI; "
                    "evaluate more examples or a model that responds to context");
  }
  write_json(to_json(res), output_dir(cfg) / "correlation.json");
  out << "r_pb = " << res.r_pb << ", t = " << res.t_stat << ", p = " << res.p_value << " (n = "
      << res.n << ")\n";
}

// Documents of a one-sentence-per-line file, blank lines between documents.
std::vector<std::vector<std::string>> read_doc_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::string>> docs(1);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!docs.back().empty()) docs.emplace_back();
    } else {
      docs.back().push_back(line);
    }
  }
  if (docs.back().empty()) docs.pop_back();
  return docs;
}

void cmd_translate(const ExperimentConfig& cfg, const Overrides& o, std::ostream& out) {
  const auto m = load_model(cfg);
  std::vector<std::vector<std::string>> sources, refs;
  if (!o.input.empty()) {
    require_file(o.input, "input");
    sources = read_doc_lines(o.input);
    if (!o.references.empty()) {
      require_file(o.references, "references");
      refs = read_doc_lines(o.references);
    }
  } else {
    const auto corpus = load_main_corpus(cfg);
    for (const auto& d : corpus.documents()) {
      sources.push_back(d.sources());
      refs.push_back(d.targets());
    }
  }
  const ContextSpec ctx{cfg.eval.side, cfg.eval.k};
  std::vector<std::string> lines, hyps, flat_refs;
  for (std::size_t d = 0; d < sources.size(); ++d) {
    const auto doc = decode_document(*m.loaded.model, sources[d], m.tok, ctx, cfg.eval.beam);
    if (d) lines.emplace_back();
    lines.insert(lines.end(), doc.begin(), doc.end());
    hyps.insert(hyps.end(), doc.begin(), doc.end());
  }
  const fs::path dir = output_dir(cfg);
  write_lines(lines, dir / "translation.txt");
  if (!refs.empty()) {
    for (const auto& r : refs) flat_refs.insert(flat_refs.end(), r.begin(), r.end());
    if (flat_refs.size() != hyps.size()) {
      throw DataError("references have " + std::to_string(flat_refs.size()) + " sentences, input has " +
                      std::to_string(hyps.size()));
    }
    const auto st = bleu_stats(hyps, flat_refs);
    write_json({{"format", "ctxmt-bleu-v1"},
                {"bleu", st.score},
                {"precisions", st.precisions},
                {"brevity_penalty", st.brevity_penalty},
                {"hyp_length", st.hyp_length},
                {"ref_length", st.ref_length}},
               dir / "bleu.json");
    out << "BLEU " << st.score << '\n';
  }
  out << "translated " << hyps.size() << " sentences -> " << (dir / "translation.txt").string() << '\n';
}

void cmd_augment_preview(const ExperimentConfig& cfg, std::ostream& out) {
  const auto corpus = load_main_corpus(cfg);
  require_file(cfg.paths.tokenizer, "tokenizer");
  const auto tok = Tokenizer::load(cfg.paths.tokenizer);
  Rng rng(cfg.augment.seed);
  std::vector<std::string> lines;
  for (const auto& doc : encode_corpus(corpus, tok)) {
    for (std::size_t i = 0; i < doc.size() && lines.size() < cfg.eval.preview; ++i) {
      const auto ex = coword_dropout(assemble_example(doc, i, 0, 0), cfg.augment.coword_p, rng);
      lines.push_back(tok.decode(ex.src));
    }
  }
  write_lines(lines, output_dir(cfg) / "augment_preview.txt");
  for (const auto& l : lines) out << l << '\n';
}

// ---- dispatch -----------------------------------------------------------

enum class Cmd { kTrain, kCxmi, kSweep, kContrastive, kCorrelate, kTranslate, kPreview, kTokenizer, kSynth };

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--out", o.output_dir, "output directory (paths.output_dir)");
  sub->add_option("--seed", o.seed, "seed for training, augmentation and bootstrap");
}

void add_corpus(CLI::App* sub, Overrides& o) {
  sub->add_option("--corpus", o.corpus, "parallel corpus (paths.corpus)");
  sub->add_option("--corpus-format", o.corpus_format, "jsonl | text");
  sub->add_option("--tokenizer", o.tokenizer, "tokenizer JSON (paths.tokenizer)");
}

void add_model(CLI::App* sub, Overrides& o) {
  sub->add_option("--checkpoint", o.checkpoint, "model checkpoint (paths.checkpoint)");
  sub->add_option("--threads", o.threads, "worker threads for scoring");
}

void add_context(CLI::App* sub, Overrides& o) {
  sub->add_option("--side", o.side, "context side: source | target | both");
  sub->add_option("--k", o.k, "number of context sentences");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  const std::string started_utc = utc_now();
  Overrides o;
  Cmd cmd = Cmd::kTrain;
  std::string cmd_name;

  CLI::App app{"Context-aware machine translation toolkit: training, CXMI, contrastive evaluation"};
  app.name("ctxmt");
  app.require_subcommand(1, 1);
  auto bind = [&](CLI::App* sub, Cmd c) {
    sub->callback([&, c, sub] {
      cmd = c;
      cmd_name = sub->get_name();
    });
    add_common(sub, o);
    return sub;
  };

  auto* train_cmd = bind(app.add_subcommand("train", "train a toy transformer"), Cmd::kTrain);
  add_corpus(train_cmd, o);
  train_cmd->add_option("--valid", o.valid, "validation corpus (default: every 10th document)");
  train_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint to write");
  train_cmd->add_option("--coword-p", o.coword_p, "CoWord dropout probability");
  train_cmd->add_option("--max-steps", o.max_steps, "training steps");
  train_cmd->add_option("--vocab-size", o.vocab_size, "BPE size if no tokenizer is given");

  auto* cxmi_cmd = bind(app.add_subcommand("cxmi", "corpus CXMI at one context size"), Cmd::kCxmi);
  add_corpus(cxmi_cmd, o);
  add_model(cxmi_cmd, o);
  add_context(cxmi_cmd, o);
  cxmi_cmd->add_flag("--per-word", o.per_word, "also write per-token values");
  cxmi_cmd->add_flag("--bootstrap", o.bootstrap, "add a bootstrap standard error");

  auto* sweep_cmd = bind(app.add_subcommand("sweep", "CXMI for k = 0..k_max"), Cmd::kSweep);
  add_corpus(sweep_cmd, o);
  add_model(sweep_cmd, o);
  sweep_cmd->add_option("--side", o.side, "context side: source | target | both");
  sweep_cmd->add_option("--k-max", o.k_max, "largest context size");

  auto* con_cmd = bind(app.add_subcommand("contrastive", "contrastive accuracy and usage indicators"),
                       Cmd::kContrastive);
  con_cmd->add_option("--tokenizer", o.tokenizer, "tokenizer JSON (paths.tokenizer)");
  add_model(con_cmd, o);
  add_context(con_cmd, o);
  con_cmd->add_option("--dataset", o.dataset, "contrastive set (paths.contrastive)");
  con_cmd->add_option("--dataset-format", o.dataset_format, "simple-json | contrapro-json");
  con_cmd->add_flag("--no-context", o.no_context, "score without context (k = 0)");

  auto* cor_cmd = bind(app.add_subcommand("correlate", "point-biserial correlation of CXMI and indicators"),
                       Cmd::kCorrelate);
  cor_cmd->add_option("--cxmi", o.cxmi_file, "per-sample CXMI CSV (cxmi or contrastive schema)")->required();
  cor_cmd->add_option("--indicators", o.indicator_file, "contrastive CSV with indicators")->required();

  auto* tr_cmd = bind(app.add_subcommand("translate", "decode documents with running target context"),
                      Cmd::kTranslate);
  add_corpus(tr_cmd, o);
  add_model(tr_cmd, o);
  add_context(tr_cmd, o);
  tr_cmd->add_option("--beam", o.beam, "beam size (1 = greedy)");
  tr_cmd->add_option("--input", o.input, "source text: one sentence per line, blank line between documents");
  tr_cmd->add_option("--references", o.references, "reference text in the same layout");

  auto* pv_cmd = bind(app.add_subcommand("augment-preview", "show CoWord-masked source sentences"),
                      Cmd::kPreview);
  add_corpus(pv_cmd, o);
  pv_cmd->add_option("--n", o.preview, "number of sentences");
  pv_cmd->add_option("--coword-p", o.coword_p, "CoWord dropout probability");

  auto* tk_cmd = bind(app.add_subcommand("make-tokenizer", "learn a BPE tokenizer"), Cmd::kTokenizer);
  add_corpus(tk_cmd, o);
  tk_cmd->add_option("--vocab-size", o.vocab_size, "vocabulary size");

  auto* sy_cmd = bind(app.add_subcommand("synth", "generate the synthetic pronoun task"), Cmd::kSynth);
  sy_cmd->add_option("--documents", o.documents, "documents in the corpus");
  sy_cmd->add_option("--pairs", o.pairs, "contrastive pairs");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const ExperimentConfig cfg = resolve(o);
    switch (cmd) {
      case Cmd::kTrain: cmd_train(cfg, out); break;
      case Cmd::kCxmi: cmd_cxmi(cfg, out); break;
      case Cmd::kSweep: cmd_sweep(cfg, out); break;
      case Cmd::kContrastive: cmd_contrastive(cfg, out); break;
      case Cmd::kCorrelate: cmd_correlate(cfg, o, out); break;
      case Cmd::kTranslate: cmd_translate(cfg, o, out); break;
      case Cmd::kPreview: cmd_augment_preview(cfg, out); break;
      case Cmd::kTokenizer: cmd_make_tokenizer(cfg, out); break;
      case Cmd::kSynth: cmd_synth(cfg, o, out); break;
    }
    // Timestamps live only here so the report files stay reproducible.
    const fs::path dir = output_dir(cfg);
    save_experiment_config(cfg, dir / (cmd_name + ".config.json"));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_json({{"command", cmd_name}, {"args", args}, {"started", started_utc}, {"finished", utc_now()},
                {"elapsed_seconds", secs}},
               dir / (cmd_name + ".meta.json"));
    return 0;
  } catch (const ConfigError& e) {
    err << "ctxmt " << cmd_name << ": configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "ctxmt " << cmd_name << ": data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    err << "ctxmt " << cmd_name << ": numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "ctxmt " << cmd_name << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ctxmt::cli
