#include "ctxmt/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "ctxmt/errors.hpp"
#include "ctxmt/summation.hpp"
#include "ctxmt/tokenizer.hpp"

namespace ctxmt {

CorrelationResult point_biserial(const std::vector<double>& values, const std::vector<int>& labels) {
  if (values.size() != labels.size()) {
    throw DataError("point_biserial: " + std::to_string(values.size()) + " values but " +
                    std::to_string(labels.size()) + " labels");
  }
  if (values.size() < 3) throw DataError("point_biserial: need at least 3 observations");
  CorrelationResult r;
  r.n = values.size();
  CompensatedSum s0, s1, all;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw DataError("point_biserial: non-finite value at index " + std::to_string(i));
    all.add(values[i]);
    if (labels[i] == 1) {
      ++r.n_pos;
      s1.add(values[i]);
    } else if (labels[i] == 0) {
      ++r.n_neg;
      s0.add(values[i]);
    } else {
      throw DataError("point_biserial: label " + std::to_string(labels[i]) + " is not 0 or 1");
    }
  }
  if (r.n_pos == 0 || r.n_neg == 0) {
    throw DataError("point_biserial: degenerate input, all labels are " +
                    std::string(r.n_pos == 0 ? "0" : "1") + "; both classes are required");
  }
  const double n = static_cast<double>(r.n);
  const double mean = all.value() / n;
  CompensatedSum ss;
  for (double v : values) ss.add((v - mean) * (v - mean));
  const double sd = std::sqrt(ss.value() / n);
  if (!(sd > 0.0)) throw DataError("point_biserial: degenerate input, values have zero variance");
  const double n1 = static_cast<double>(r.n_pos), n0 = static_cast<double>(r.n_neg);
  const double m1 = s1.value() / n1, m0 = s0.value() / n0;
  r.r_pb = std::clamp((m1 - m0) / sd * std::sqrt(n1 * n0 / (n * n)), -1.0, 1.0);

  const double dof = n - 2.0;
  if (dof <= 0.0) {
    r.t_stat = 0.0;
    r.p_value = 1.0;
  } else if (std::abs(r.r_pb) >= 1.0) {
    r.t_stat = std::copysign(std::numeric_limits<double>::infinity(), r.r_pb);
    r.p_value = 0.0;
  } else {
    r.t_stat = r.r_pb * std::sqrt(dof / (1.0 - r.r_pb * r.r_pb));
    r.p_value = t_two_sided_p(r.t_stat, dof);
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("pearson: need two equal-length series");
  const double n = static_cast<double>(x.size());
  const double mx = compensated_sum(x) / n, my = compensated_sum(y) / n;
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy.add((x[i] - mx) * (y[i] - my));
    sxx.add((x[i] - mx) * (x[i] - mx));
    syy.add((y[i] - my) * (y[i] - my));
  }
  if (!(sxx.value() > 0.0) || !(syy.value() > 0.0)) throw DataError("pearson: zero variance");
  return sxy.value() / std::sqrt(sxx.value() * syy.value());
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m <= 10000; ++m) {
    const double dm = m;
    // even step
    double num = dm * (b - dm) * x / ((a + 2 * dm - 1) * (a + 2 * dm));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    f *= d * c;
    // odd step
    num = -(a + dm) * (a + b + dm) * x / ((a + 2 * dm) * (a + 2 * dm + 1));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < kEps) return f;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw NumericalError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw NumericalError("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fast for x < (a + 1) / (a + b + 2); use symmetry otherwise.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw NumericalError("t_two_sided_p: degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) throw NumericalError("t_two_sided_p: t is NaN");
  const double x = dof / (dof + t * t);
  return std::clamp(incomplete_beta(dof / 2.0, 0.5, x), 0.0, 1.0);
}

nlohmann::json to_json(const CorrelationResult& r) {
  return {{"format", "ctxmt-correlation-v1"}, {"r_pb", r.r_pb},   {"t_stat", r.t_stat},
          {"p_value", r.p_value},             {"n", r.n},         {"n_pos", r.n_pos},
          {"n_neg", r.n_neg}};
}

CorrelationResult correlation_from_json(const nlohmann::json& j) {
  try {
    CorrelationResult r;
    r.r_pb = j.at("r_pb").get<double>();
    // infinite t is written as null
    r.t_stat = j.at("t_stat").is_null() ? std::copysign(std::numeric_limits<double>::infinity(), r.r_pb)
                                        : j.at("t_stat").get<double>();
    r.p_value = j.at("p_value").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.n_pos = j.at("n_pos").get<std::size_t>();
    r.n_neg = j.at("n_neg").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed correlation result: ") + e.what());
  }
}

std::vector<std::string> bleu_tokenize(const std::string& sentence) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (const auto& cp : split_code_points(sentence)) {
    if (cp.size() == 1) {
      const auto c = static_cast<unsigned char>(cp[0]);
      if (std::isspace(c)) {
        flush();
        continue;
      }
      if (std::ispunct(c)) {
        flush();
        out.push_back(cp);
        continue;
      }
    }
    cur += cp;
  }
  flush();
  return out;
}

BleuStats bleu_stats(const std::vector<std::string>& hypotheses,
                     const std::vector<std::string>& references, std::size_t max_order) {
  if (hypotheses.size() != references.size()) {
    throw DataError("bleu: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                    std::to_string(references.size()) + " references");
  }
  if (max_order == 0) throw ConfigError("bleu: max_order must be positive");
  BleuStats st;
  std::vector<std::size_t> matches(max_order, 0), totals(max_order, 0);
  using Gram = std::vector<std::string>;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto h = bleu_tokenize(hypotheses[s]);
    const auto r = bleu_tokenize(references[s]);
    st.hyp_length += h.size();
    st.ref_length += r.size();
    for (std::size_t n = 1; n <= max_order; ++n) {
      std::map<Gram, std::size_t> ref_counts, hyp_counts;
      for (std::size_t i = 0; i + n <= r.size(); ++i) ++ref_counts[Gram(r.begin() + i, r.begin() + i + n)];
      for (std::size_t i = 0; i + n <= h.size(); ++i) ++hyp_counts[Gram(h.begin() + i, h.begin() + i + n)];
      for (const auto& [g, c] : hyp_counts) {
        totals[n - 1] += c;
        const auto it = ref_counts.find(g);
        if (it != ref_counts.end()) matches[n - 1] += std::min(c, it->second);
      }
    }
  }
  if (st.hyp_length == 0) return st;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_order; ++n) {
    const double t = static_cast<double>(totals[n - 1]);
    if (totals[n - 1] == 0) break;  // no longer n-grams either
    double p = static_cast<double>(matches[n - 1]) / t;
    if (matches[n - 1] == 0) {
      if (n == 1) {
        st.precisions.push_back(0.0);
        return st;
      }
      p = 1.0 / (t + 1.0);
    }
    st.precisions.push_back(p);
    log_sum += std::log(p);
  }
  const double h = static_cast<double>(st.hyp_length), r = static_cast<double>(st.ref_length);
  st.brevity_penalty = h < r ? std::exp(1.0 - r / h) : 1.0;
  st.score = 100.0 * st.brevity_penalty * std::exp(log_sum / static_cast<double>(st.precisions.size()));
  return st;
}

double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  return bleu_stats(hypotheses, references).score;
}

}  // namespace ctxmt
