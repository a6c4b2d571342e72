#include <cmath>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "ctxmt/errors.hpp"
#include "ctxmt/random.hpp"
#include "ctxmt/stats.hpp"
#include "doctest.h"

using namespace ctxmt;

TEST_SUITE("stats") {
  TEST_CASE("point-biserial fixture") {
    auto r = point_biserial({1, 2, 3, 4}, {0, 0, 1, 1});
    CHECK(r.r_pb == doctest::Approx(0.8944).epsilon(1e-4));
    CHECK(r.n == 4);
    CHECK(r.n_pos == 2);
    CHECK(r.n_neg == 2);
    CHECK(point_biserial({1, 2, 1, 2}, {0, 0, 1, 1}).r_pb == doctest::Approx(0.0));
  }

  TEST_CASE("degenerate inputs") {
    CHECK_THROWS_AS(point_biserial({1, 2, 3}, {1, 1, 1}), DataError);
    CHECK_THROWS_AS(point_biserial({2, 2, 2, 2}, {0, 1, 0, 1}), DataError);
    CHECK_THROWS_AS(point_biserial({1, 2}, {0, 1}), DataError);
    CHECK_THROWS_AS(point_biserial({1, 2, 3}, {0, 1}), DataError);
    CHECK_THROWS_AS(point_biserial({1, 2, 3}, {0, 2, 1}), DataError);
  }

  TEST_CASE("equals Pearson and obeys the affine law") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform_int(0, 40));
      std::vector<double> v(n), b(n);
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = rng.normal();
        labels[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.bernoulli(0.4));
        b[i] = labels[i];
      }
      const double r = point_biserial(v, labels).r_pb;
      CHECK(std::abs(r - pearson(v, b)) < 1e-9);
      const double a = rng.bernoulli(0.5) ? -3.5 : 0.25, c = 7.0;
      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = a * v[i] + c;
      CHECK(std::abs(point_biserial(w, labels).r_pb - (a > 0 ? r : -r)) < 1e-9);
    }
  }

  TEST_CASE("incomplete beta agrees with boost") {
    for (double a : {0.5, 1.0, 2.5, 10.0, 49.0}) {
      for (double b : {0.5, 1.0, 3.0}) {
        for (double x : {0.001, 0.1, 0.37, 0.5, 0.9, 0.999}) {
          CHECK(incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-10));
        }
      }
    }
    CHECK(incomplete_beta(2, 3, 0) == 0.0);
    CHECK(incomplete_beta(2, 3, 1) == 1.0);
  }

  TEST_CASE("t p-values match tabulated critical values") {
    // two-sided 0.05 critical values of Student's t
    CHECK(t_two_sided_p(12.706, 1) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(t_two_sided_p(2.228, 10) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(t_two_sided_p(2.042, 30) == doctest::Approx(0.05).epsilon(1e-3));
    // 0.01 level
    CHECK(t_two_sided_p(3.169, 10) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(t_two_sided_p(0.0, 5) == doctest::Approx(1.0));
    for (double dof : {3.0, 17.0, 250.0}) {
      boost::math::students_t dist(dof);
      for (double t : {0.3, 1.7, 4.2}) {
        CHECK(t_two_sided_p(t, dof) == doctest::Approx(2 * boost::math::cdf(boost::math::complement(dist, t))).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("significance of the fixture") {
    auto r = point_biserial({1, 2, 3, 4}, {0, 0, 1, 1});
    CHECK(r.t_stat == doctest::Approx(0.8944272 * std::sqrt(2.0 / (1 - 0.8))).epsilon(1e-6));
    CHECK(r.p_value > 0.05);
    CHECK(r.p_value < 1.0);
  }

  TEST_CASE("BLEU") {
    std::vector<std::string> refs{"the cat sat on the mat .", "a dog barked at the moon"};
    CHECK(bleu(refs, refs) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(bleu({"", ""}, refs) == 0.0);
    CHECK_THROWS_AS(bleu({"x"}, refs), DataError);
    // unigrams: "the" clipped to 1 of 3; bigrams: 0 of 2 -> 1/3; trigrams: 0 of 1 -> 1/2;
    // no 4-grams; hypothesis longer than reference so no brevity penalty.
    const double hand = 100.0 * std::cbrt((1.0 / 3.0) * (1.0 / 3.0) * 0.5);
    CHECK(std::abs(bleu({"the the the"}, {"the cat"}) - hand) < 1e-6);
  }

  TEST_CASE("BLEU brevity penalty and tokenization") {
    auto st = bleu_stats({"the cat"}, {"the cat sat down"});
    CHECK(st.brevity_penalty == doctest::Approx(std::exp(1.0 - 4.0 / 2.0)));
    CHECK(bleu_tokenize("Hello, world!") == std::vector<std::string>{"Hello", ",", "world", "!"});
    CHECK(bleu_tokenize("  schläft  .") == std::vector<std::string>{"schläft", "."});
  }

  TEST_CASE("corrupting one token never raises BLEU") {
    Rng rng(23);
    const std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g", "h"};
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::string> refs;
      for (int s = 0; s < 3; ++s) {
        std::string r;
        const auto len = 1 + rng.uniform_int(0, 8);
        for (int i = 0; i < len; ++i) r += (i ? " " : "") + words[static_cast<std::size_t>(rng.uniform_int(0, 7))];
        refs.push_back(r);
      }
      auto hyps = refs;
      auto toks = bleu_tokenize(hyps[0]);
      toks[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(toks.size()) - 1))] = "zzz";
      std::string h;
      for (std::size_t i = 0; i < toks.size(); ++i) h += (i ? " " : "") + toks[i];
      hyps[0] = h;
      CHECK(bleu(hyps, refs) <= bleu(refs, refs));
    }
  }
}
