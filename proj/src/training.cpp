#include "ctxmt/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <nlohmann/json.hpp>

#include "ctxmt/errors.hpp"

namespace ctxmt {

void TrainConfig::validate() const {
  if (!(peak_lr >= 0.0)) throw ConfigError("peak_lr must be >= 0");
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ConfigError("label_smoothing must lie in [0, 1)");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = nlohmann::json{{"peak_lr", cfg.peak_lr},
                     {"warmup_steps", cfg.warmup_steps},
                     {"adam_beta1", cfg.adam_beta1},
                     {"adam_beta2", cfg.adam_beta2},
                     {"adam_eps", cfg.adam_eps},
                     {"max_steps", cfg.max_steps},
                     {"patience", cfg.patience},
                     {"eval_every", cfg.eval_every},
                     {"batch_size", cfg.batch_size},
                     {"label_smoothing", cfg.label_smoothing},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  cfg.peak_lr = j.value("peak_lr", cfg.peak_lr);
  cfg.warmup_steps = j.value("warmup_steps", cfg.warmup_steps);
  cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
  cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
  cfg.max_steps = j.value("max_steps", cfg.max_steps);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.eval_every = j.value("eval_every", cfg.eval_every);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.label_smoothing = j.value("label_smoothing", cfg.label_smoothing);
  cfg.seed = j.value("seed", cfg.seed);
}

double lr_schedule(std::size_t step, const TrainConfig& cfg) {
  if (step < 1) throw ConfigError("lr_schedule is defined for step >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(cfg.warmup_steps);
  return cfg.peak_lr * std::min(s / w, std::sqrt(w / s));
}

double perplexity(const ToyTransformer& model, const std::vector<TranslationExample>& examples) {
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : examples) {
    const auto stats = model.evaluate_loss(ex, 0.0);
    nll += stats.nll_sum;
    tokens += stats.tokens;
  }
  return tokens == 0 ? 1.0 : std::exp(nll / static_cast<double>(tokens));
}

std::vector<TranslationExample> validation_examples(const std::vector<EncodedDocument>& valid,
                                                    const AugmentConfig& aug) {
  AugmentConfig eval_cfg = aug;
  eval_cfg.coword_p = 0.0;
  Rng rng(aug.seed ^ 0x5EED5EEDULL);
  return build_training_stream(valid, eval_cfg, rng);
}

namespace {

class Adam {
 public:
  Adam(std::size_t n, const TrainConfig& cfg) : m_(n, 0.0), v_(n, 0.0), cfg_(cfg) {}

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    ++t_;
    const double b1 = cfg_.adam_beta1;
    const double b2 = cfg_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
      v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.adam_eps);
    }
  }

 private:
  std::vector<double> m_, v_;
  const TrainConfig& cfg_;
  std::size_t t_ = 0;
};

}  // namespace

TrainResult train(const ParallelCorpus& train_corpus, const ParallelCorpus& valid_corpus,
                  const Tokenizer& tok, const ToyTransformerConfig& model_cfg,
                  const TrainConfig& train_cfg, const AugmentConfig& aug_cfg) {
  train_cfg.validate();
  aug_cfg.validate();
  model_cfg.validate();
  if (train_corpus.empty()) throw DataError("training corpus is empty");
  if (valid_corpus.empty()) throw DataError("validation corpus is empty");

  const auto train_docs = encode_corpus(train_corpus, tok);
  const auto valid_set = validation_examples(encode_corpus(valid_corpus, tok), aug_cfg);

  Rng seeds(train_cfg.seed);
  ToyTransformer model(model_cfg, tok.vocab_size(), seeds.fork_seed());
  Rng shuffle_rng(seeds.fork_seed());
  Rng dropout_rng(seeds.fork_seed());
  Rng aug_rng(aug_cfg.seed);

  TrainResult result{model, {}, {}, std::numeric_limits<double>::infinity(), 0, 0};
  Adam adam(model.parameter_count(), train_cfg);
  std::vector<double> grad(model.parameter_count());

  std::vector<TranslationExample> epoch;
  std::size_t cursor = 0;
  std::size_t stale = 0;
  for (std::size_t step = 1; step <= train_cfg.max_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    LossStats batch;
    for (std::size_t b = 0; b < train_cfg.batch_size; ++b) {
      if (cursor == epoch.size()) {
        epoch = build_training_stream(train_docs, aug_cfg, aug_rng);
        for (std::size_t i = epoch.size(); i > 1; --i) {
          const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
          std::swap(epoch[i - 1], epoch[j]);
        }
        cursor = 0;
      }
      batch += model.accumulate_gradient(epoch[cursor++], train_cfg.label_smoothing, grad,
                                         &dropout_rng);
    }
    const double mean_loss = batch.loss_sum / static_cast<double>(std::max<std::size_t>(batch.tokens, 1));
    if (!std::isfinite(mean_loss)) {
      throw NumericalError("training loss diverged (" + std::to_string(mean_loss) + ") at step " +
                           std::to_string(step));
    }
    const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(batch.tokens, 1));
    for (double& g : grad) g *= inv;
    const double lr = lr_schedule(step, train_cfg);
    adam.step(model.parameters(), grad, lr);
    result.steps = step;

    TrainLogRow row{step, mean_loss, lr};
    const bool last = step == train_cfg.max_steps;
    if (step % train_cfg.eval_every == 0 || last) {
      const double ppl = perplexity(model, valid_set);
      if (!std::isfinite(ppl)) {
        throw NumericalError("validation perplexity is not finite at step " + std::to_string(step));
      }
      row.valid_ppl = ppl;
      result.valid_ppl_trace.push_back(ppl);
      if (ppl < result.best_valid_ppl) {
        result.best_valid_ppl = ppl;
        result.best_step = step;
        result.model = model;
        stale = 0;
      } else if (++stale >= train_cfg.patience && train_cfg.patience > 0) {
        result.log.push_back(row);
        break;
      }
    }
    result.log.push_back(row);
  }
  return result;
}

TrainResult train(const ParallelCorpus& corpus, const Tokenizer& tok,
                  const ToyTransformerConfig& model_cfg, const TrainConfig& train_cfg,
                  const AugmentConfig& aug_cfg) {
  if (corpus.size() < 2) throw DataError("need at least two documents to hold one out");
  auto [train_part, valid_part] = corpus.split_every(std::min<std::size_t>(10, corpus.size()));
  return train(train_part, valid_part, tok, model_cfg, train_cfg, aug_cfg);
}

void write_train_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# ctxmt-train-log-v1\n";
  out << "step,loss,lr,valid_ppl\n";
  out << std::setprecision(10);
  for (const auto& r : log) {
    out << r.step << ',' << r.loss << ',' << r.lr << ',';
    if (!std::isnan(r.valid_ppl)) out << r.valid_ppl;
    out << '\n';
  }
}

}  // namespace ctxmt
