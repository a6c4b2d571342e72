#include "ctxmt/scoring_model.hpp"

namespace ctxmt {

std::vector<double> ScoringModel::score(const TranslationExample& ex) const {
  const LogProbMatrix dist = log_distributions(ex);
  std::vector<double> out(ex.tgt.size() + 1);
  for (std::size_t t = 0; t < ex.tgt.size(); ++t) {
    out[t] = dist(static_cast<Eigen::Index>(t), ex.tgt[t]);
  }
  out.back() = dist(static_cast<Eigen::Index>(ex.tgt.size()), special::kEos);
  return out;
}

double sequence_log_prob(const ScoringModel& model, const TranslationExample& ex) {
  double total = 0.0;
  for (double v : model.score(ex)) total += v;
  return total;
}

}  // namespace ctxmt
