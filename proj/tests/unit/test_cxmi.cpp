#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "ctxmt/cxmi.hpp"
#include "ctxmt/errors.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace ctxmt;

namespace {

// H(Y|X) - H(Y|X,C) straight from the table, written independently of
// true_cmi's log-ratio form.
double entropy_difference(const EnumerationChannel& ch) {
  double h_y_x = 0.0, h_y_xc = 0.0;
  for (std::size_t x = 0; x < ch.nx(); ++x) {
    std::vector<double> pxy(ch.ny(), 0.0);
    double px = 0.0;
    for (std::size_t c = 0; c < ch.nc(); ++c) {
      double pcx = 0.0;
      for (std::size_t y = 0; y < ch.ny(); ++y) pcx += ch.p(c, x, y);
      for (std::size_t y = 0; y < ch.ny(); ++y) {
        const double pj = ch.p(c, x, y);
        pxy[y] += pj;
        px += pj;
        if (pj > 0) h_y_xc -= pj * std::log(pj / pcx);
      }
    }
    for (double v : pxy) {
      if (v > 0) h_y_x -= v * std::log(v / px);
    }
  }
  return h_y_x - h_y_xc;
}

std::vector<LabeledExample> channel_samples(const EnumerationModel& m, std::size_t n, std::size_t len,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"s" + std::to_string(i), sample_channel_example(m, len, rng)});
  return out;
}

// Context symbols are target symbols: y_t copies the previous sentence's
// y_t w.p. 0.8, otherwise it equals x_t.
EnumerationChannel chain_channel() {
  return EnumerationChannel::build({"y0", "y1"}, {"x0", "x1"}, {"y0", "y1"}, {0.5, 0.5}, {0.5, 0.5},
                                   [](std::size_t c, std::size_t x) {
                                     std::vector<double> p(2, 0.0);
                                     p[c] += 0.8;
                                     p[x] += 0.2;
                                     return p;
                                   });
}

// Four two-symbol sentences per document generated along the chain.
ParallelCorpus chain_corpus(std::size_t docs, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ParallelDocument> out;
  for (std::size_t d = 0; d < docs; ++d) {
    std::vector<SentencePair> pairs;
    std::vector<int> prev{static_cast<int>(rng.uniform_int(0, 1)), static_cast<int>(rng.uniform_int(0, 1))};
    for (int i = 0; i < 4; ++i) {
      std::string src, tgt;
      for (std::size_t t = 0; t < 2; ++t) {
        const int x = static_cast<int>(rng.uniform_int(0, 1));
        const int y = rng.bernoulli(0.8) ? prev[t] : x;
        src += (t ? " x" : "x") + std::to_string(x);
        tgt += (t ? " y" : "y") + std::to_string(y);
        prev[t] = y;
      }
      pairs.push_back({src, tgt});
    }
    out.emplace_back("d" + std::to_string(d), pairs);
  }
  return ParallelCorpus(out);
}

// Scores with a table that believes y is the *other* context symbol.
class ContrarianModel : public ScoringModel {
 public:
  ContrarianModel()
      : inner_(EnumerationChannel::build({"c0", "c1"}, {"x0", "x1"}, {"y0", "y1"}, {0.5, 0.5}, {0.5, 0.5},
                                         [](std::size_t c, std::size_t) {
                                           return c == 0 ? std::vector<double>{0.2, 0.8}
                                                         : std::vector<double>{0.8, 0.2};
                                         })) {}
  std::string_view kind() const override { return "contrarian"; }
  std::size_t vocab_size() const override { return inner_.vocab_size(); }
  LogProbMatrix log_distributions(const TranslationExample& ex) const override {
    return inner_.log_distributions(ex);
  }

 private:
  EnumerationModel inner_;
};

}  // namespace

TEST_SUITE("cxmi") {
  TEST_CASE("information gain") {
    std::vector<double> a{-2.0, -3.0}, b{-1.5, -2.5};
    CHECK(info_gain(a, a) == 0.0);
    CHECK(info_gain(a, b) == doctest::Approx(0.5));
    CHECK(info_gain(std::vector<double>{-1.0}, std::vector<double>{-2.0}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(info_gain(a, std::vector<double>{-1.0}), DataError);
  }

  TEST_CASE("per-word values on a context-determined first position") {
    EnumerationModel m(testutil::copy_context_channel());
    const auto& tok = m.tokenizer();
    // the context sentence has one symbol, so only position 0 sees a c
    TranslationExample ex{{}, {tok.encode("c1")}, tok.encode("x0 x1"), tok.encode("y1 y0")};
    auto words = per_word_cxmi(m, ex, ex.without_context());
    REQUIRE(words.size() == 3);
    CHECK(words[0] == doctest::Approx(-std::log(0.5)));
    CHECK(words[1] == 0.0);
    CHECK(words[2] == 0.0);
    CHECK(per_sample_cxmi(m, ex, ex.without_context()) == doctest::Approx(words[0] + words[1] + words[2]));
    auto plain = ex.without_context();
    for (double v : per_word_cxmi(m, plain, plain)) CHECK(v == 0.0);
    auto other = ex.without_context();
    other.tgt = tok.encode("y0 y0");
    CHECK_THROWS_AS(per_word_cxmi(m, ex, other), DataError);
  }

  TEST_CASE("true CMI against closed forms and an entropy oracle") {
    auto independent = EnumerationChannel::build({"c0", "c1"}, {"x0"}, {"y0", "y1"}, {0.5, 0.5}, {1.0},
                                                 [](std::size_t, std::size_t) { return std::vector<double>{0.3, 0.7}; });
    CHECK(std::abs(true_cmi(independent)) < 1e-15);
    CHECK(true_cmi(testutil::copy_context_channel()) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    for (const auto& ch : {testutil::mixed_channel(), testutil::identity_channel(), testutil::copy_context_channel()}) {
      CHECK(true_cmi(ch) >= 0.0);
      CHECK(true_cmi(ch) == doctest::Approx(entropy_difference(ch)).epsilon(1e-12));
    }
  }

  TEST_CASE("estimator is consistent with the true CMI") {
    for (const auto& ch : {testutil::mixed_channel(), testutil::copy_context_channel()}) {
      EnumerationModel m(ch);
      auto rep = estimate_cxmi(m, channel_samples(m, 20000, 1, 3), {ContextSide::kTarget, 1});
      CHECK(std::abs(rep.corpus_cxmi - true_cmi(ch)) < 3 * rep.std_error + 1e-12);
      CHECK(rep.n == 20000);
    }
  }

  TEST_CASE("aggregation laws") {
    EnumerationModel m(testutil::mixed_channel());
    CxmiOptions opt;
    opt.per_word = true;
    auto rep = estimate_cxmi(m, channel_samples(m, 1000, 3, 8), {ContextSide::kTarget, 1}, opt);
    double mean_samples = 0.0;
    for (const auto& s : rep.per_sample) mean_samples += s.cxmi;
    mean_samples /= static_cast<double>(rep.per_sample.size());
    CHECK(std::abs(rep.corpus_cxmi - mean_samples) < 1e-9);
    std::map<std::string, double> sums;
    double all = 0.0;
    for (const auto& w : rep.per_word) {
      sums[w.example_id] += w.cxmi;
      all += w.cxmi;
    }
    for (const auto& s : rep.per_sample) CHECK(std::abs(sums[s.example_id] - s.cxmi) < 1e-9);
    CHECK(std::abs(rep.per_token_cxmi - all / static_cast<double>(rep.tokens)) < 1e-9);
    CHECK(rep.tokens == rep.per_word.size());
  }

  TEST_CASE("zero law on corpora") {
    auto corpus = chain_corpus(40, 5);
    EnumerationModel m(chain_channel());
    const auto& tok = m.tokenizer();
    CHECK(corpus_cxmi(m, corpus, tok, {ContextSide::kTarget, 0}).corpus_cxmi == 0.0);
    auto rep = corpus_cxmi(m, corpus, tok, {ContextSide::kTarget, 2});
    for (const auto& s : rep.per_sample) {
      if (s.example_id.ends_with(":0")) CHECK(s.cxmi == 0.0);
    }
  }

  TEST_CASE("a model misled by context gets negative CXMI") {
    ContrarianModel wrong;
    EnumerationModel truth(testutil::copy_context_channel());
    auto rep = estimate_cxmi(wrong, channel_samples(truth, 500, 2, 4), {ContextSide::kTarget, 1});
    CHECK(rep.corpus_cxmi < 0.0);
  }

  TEST_CASE("threads do not change results") {
    EnumerationModel m(testutil::mixed_channel());
    auto samples = channel_samples(m, 300, 3, 2);
    CxmiOptions one, four;
    four.threads = 4;
    auto a = estimate_cxmi(m, samples, {ContextSide::kTarget, 1}, one);
    auto b = estimate_cxmi(m, samples, {ContextSide::kTarget, 1}, four);
    CHECK(a.corpus_cxmi == b.corpus_cxmi);
    CHECK(a.std_error == b.std_error);
  }

  TEST_CASE("bootstrap is opt-in and close to the analytic error") {
    EnumerationModel m(testutil::mixed_channel());
    auto samples = channel_samples(m, 2000, 1, 6);
    CHECK(!estimate_cxmi(m, samples, {ContextSide::kTarget, 1}).bootstrap_std_error);
    CxmiOptions opt;
    opt.bootstrap = true;
    opt.bootstrap_samples = 400;
    auto rep = estimate_cxmi(m, samples, {ContextSide::kTarget, 1}, opt);
    REQUIRE(rep.bootstrap_std_error);
    CHECK(*rep.bootstrap_std_error == doctest::Approx(rep.std_error).epsilon(0.2));
  }

  TEST_CASE("sweeps") {
    auto corpus = chain_corpus(60, 9);
    EnumerationModel m(chain_channel());
    const auto& tok = m.tokenizer();
    auto single = cxmi_sweep(m, corpus, tok, ContextSide::kTarget, 0);
    REQUIRE(single.points.size() == 1);
    CHECK(single.points[0].cxmi == 0.0);

    auto curve = cxmi_sweep(m, corpus, tok, ContextSide::kTarget, 3, 2);
    REQUIRE(curve.points.size() == 4);
    CHECK(curve.points[1].cxmi > 0.0);
    // only the last context sentence matters to this model
    CHECK(curve.points[2].cxmi == doctest::Approx(curve.points[1].cxmi).epsilon(1e-12));
    CHECK(curve.points[3].cxmi == doctest::Approx(curve.points[1].cxmi).epsilon(1e-12));
    CHECK(curve.warnings.size() == 1);
    CHECK(curve.points[1].cxmi ==
          doctest::Approx(corpus_cxmi(m, corpus, tok, {ContextSide::kTarget, 1}).corpus_cxmi).epsilon(1e-12));
  }

  TEST_CASE("reports round trip through CSV and JSON") {
    auto dir = testutil::scratch_dir("cxmi_io");
    EnumerationModel m(testutil::mixed_channel());
    CxmiOptions opt;
    opt.per_word = true;
    auto rep = estimate_cxmi(m, channel_samples(m, 50, 2, 1), {ContextSide::kTarget, 1}, opt);
    write_cxmi_csv(rep, dir / "s.csv");
    auto rows = read_cxmi_csv(dir / "s.csv");
    REQUIRE(rows.size() == rep.per_sample.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].example_id == rep.per_sample[i].example_id);
      CHECK(rows[i].cxmi == rep.per_sample[i].cxmi);
    }
    auto back = cxmi_report_from_json(to_json(rep));
    CHECK(back.corpus_cxmi == rep.corpus_cxmi);
    CHECK(back.per_word.size() == rep.per_word.size());
    CHECK(back.context.k == 1);
    write_word_cxmi_csv(rep, &m.tokenizer(), dir / "w.csv");
    CHECK(testutil::read_file(dir / "w.csv").rfind("# ctxmt-cxmi-words-v1\n", 0) == 0);
    testutil::write_file(dir / "bad.csv", "# x\nwrong,header\n");
    CHECK_THROWS_AS(read_cxmi_csv(dir / "bad.csv"), DataError);
  }
}
