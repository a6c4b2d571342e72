#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ctxmt {

struct CorrelationResult {
  double r_pb = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;  // two-sided, t distribution with n - 2 dof
  std::size_t n = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

// Point-biserial correlation of `values` with 0/1 `labels`.
// Throws DataError on length mismatch, n < 3, labels outside {0,1}, a single
// label class, or constant values.
CorrelationResult point_biserial(const std::vector<double>& values, const std::vector<int>& labels);

// Plain Pearson correlation; throws DataError on zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);

// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double t_two_sided_p(double t, double dof);

nlohmann::json to_json(const CorrelationResult& r);
CorrelationResult correlation_from_json(const nlohmann::json& j);

// Punctuation gets split off words, then whitespace splitting.
std::vector<std::string> bleu_tokenize(const std::string& sentence);

struct BleuStats {
  double score = 0.0;  // in [0, 100]
  std::vector<double> precisions;  // per effective order, after smoothing
  double brevity_penalty = 1.0;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

// Corpus BLEU, clipped counts up to 4-grams. Orders with no hypothesis
// n-grams in the whole corpus are dropped from the geometric mean; a zero
// match count for n >= 2 is smoothed to 1 / (total + 1).
BleuStats bleu_stats(const std::vector<std::string>& hypotheses,
                     const std::vector<std::string>& references, std::size_t max_order = 4);
double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

}  // namespace ctxmt
