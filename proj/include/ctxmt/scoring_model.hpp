#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ctxmt/example.hpp"

namespace ctxmt {

using LogProbMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Teacher-forced conditional log-probabilities. The same object answers for
// the context-aware and the context-agnostic pass; the example decides which.
class ScoringModel {
 public:
  virtual ~ScoringModel() = default;

  virtual std::string_view kind() const = 0;
  virtual std::size_t vocab_size() const = 0;

  // Row t is the log-distribution over the vocabulary of the token predicted
  // after tgt[0..t); there are len(tgt) + 1 rows, the last one for EOS.
  virtual LogProbMatrix log_distributions(const TranslationExample& ex) const = 0;

  // log q(y_t | x, y_<t, C) for t = 0..len(tgt), including the final EOS.
  virtual std::vector<double> score(const TranslationExample& ex) const;
};

double sequence_log_prob(const ScoringModel& model, const TranslationExample& ex);

}  // namespace ctxmt
