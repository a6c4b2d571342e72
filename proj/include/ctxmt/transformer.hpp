#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctxmt/random.hpp"
#include "ctxmt/scoring_model.hpp"

namespace ctxmt {

struct ToyTransformerConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t model_dim = 128;
  std::size_t ff_dim = 256;
  std::size_t max_positions = 512;
  double dropout = 0.1;

  void validate() const;
};

void to_json(nlohmann::json& j, const ToyTransformerConfig& cfg);
void from_json(const nlohmann::json& j, ToyTransformerConfig& cfg);

// A named slice of the flat parameter vector (column-major rows x cols).
struct ParamTensor {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

struct LossStats {
  double loss_sum = 0.0;  // label-smoothed cross-entropy, summed over scored tokens
  double nll_sum = 0.0;   // plain negative log-likelihood, summed
  std::size_t tokens = 0;

  LossStats& operator+=(const LossStats& o) {
    loss_sum += o.loss_sum;
    nll_sum += o.nll_sum;
    tokens += o.tokens;
    return *this;
  }
};

// Pre-norm encoder-decoder transformer with tied input/output embeddings and
// sinusoidal positions. Source context enters the encoder by concatenation,
// target context as a decoder prefix whose predictions carry no loss.
class ToyTransformer : public ScoringModel {
 public:
  ToyTransformer(ToyTransformerConfig cfg, std::size_t vocab_size, std::uint64_t init_seed);
  ToyTransformer(ToyTransformerConfig cfg, std::size_t vocab_size, std::vector<double> params);

  std::string_view kind() const override { return "transformer"; }
  std::size_t vocab_size() const override { return vocab_size_; }
  LogProbMatrix log_distributions(const TranslationExample& ex) const override;

  // Loss over the current target sentence (plus EOS). Adds d(loss_sum)/dθ to
  // `grad`. Model dropout is active only when `dropout_rng` is non-null.
  LossStats accumulate_gradient(const TranslationExample& ex, double label_smoothing,
                                std::span<double> grad, Rng* dropout_rng) const;
  LossStats evaluate_loss(const TranslationExample& ex, double label_smoothing) const;
  // Which feed-forward ReLUs are active (encoder layers, then decoder), for
  // spotting finite-difference steps that straddle a kink.
  std::vector<bool> relu_pattern(const TranslationExample& ex) const;

  const ToyTransformerConfig& config() const { return cfg_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<ParamTensor>& tensors() const { return tensors_; }

 private:
  ToyTransformerConfig cfg_;
  std::size_t vocab_size_;
  std::vector<ParamTensor> tensors_;
  std::vector<double> params_;
};

}  // namespace ctxmt
