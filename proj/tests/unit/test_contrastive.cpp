#include <map>
#include <set>

#include "ctxmt/contrastive.hpp"
#include "ctxmt/errors.hpp"
#include "ctxmt/synthetic.hpp"
#include "ctxmt/transformer.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace ctxmt;

namespace {

ContrastiveExample copy_example(const std::string& ctx, const std::string& correct, const std::string& wrong) {
  ContrastiveExample ex;
  ex.example_id = "e-" + ctx;
  ex.tgt_context = {ctx};
  ex.src = "x0";
  ex.correct_tgt = correct;
  ex.contrastive_tgts = {wrong};
  ex.phenomenon = Phenomenon::kPronoun;
  return ex;
}

}  // namespace

TEST_SUITE("contrastive") {
  TEST_CASE("simple-json loader") {
    auto dir = testutil::scratch_dir("contrastive_simple");
    std::string text;
    for (int i = 0; i < 3; ++i) {
      text += R"({"id": "q)" + std::to_string(i) +
              R"(", "src_ctx": ["a"], "tgt_ctx": ["b"], "src": "it", "correct": "er", "contrastive": ["sie", "es"], "phenomenon": "pronoun"})" "\n";
    }
    testutil::write_file(dir / "s.jsonl", text);
    auto set = load_contrastive(dir / "s.jsonl", ContrastiveFormat::kSimpleJson);
    REQUIRE(set.size() == 3);
    for (const auto& ex : set) CHECK(ex.contrastive_tgts.size() == 2);
    CHECK(set[1].example_id == "q1");

    testutil::write_file(dir / "empty.jsonl", R"({"src": "it", "correct": "er", "contrastive": []})" "\n");
    CHECK_THROWS_AS(load_contrastive(dir / "empty.jsonl", ContrastiveFormat::kSimpleJson), DataError);
    testutil::write_file(dir / "nocorrect.jsonl", R"({"src": "it", "contrastive": ["x"]})" "\n");
    CHECK_THROWS_AS(load_contrastive(dir / "nocorrect.jsonl", ContrastiveFormat::kSimpleJson), DataError);

    save_contrastive(set, dir / "again.jsonl");
    auto again = load_contrastive(dir / "again.jsonl", ContrastiveFormat::kSimpleJson);
    CHECK(again[2].correct_tgt == set[2].correct_tgt);
    CHECK(again[2].tgt_context == set[2].tgt_context);
  }

  TEST_CASE("contrapro-style records keep four context sentences") {
    auto dir = testutil::scratch_dir("contrastive_contrapro");
    testutil::write_file(dir / "c.json", R"([
      {"document id": "doc9", "segment id": 12, "src segment": "It is red.", "ref segment": "Sie ist rot.",
       "ref pronoun": "Sie", "errors": [{"contrastive": "Er ist rot.", "replacement": "Er"},
                                       {"contrastive": "Es ist rot.", "replacement": "Es"}],
       "src context": ["a", "b", "c", "d"], "ref context": ["A", "B", "C", "D"]}
    ])");
    auto set = load_contrastive(dir / "c.json", ContrastiveFormat::kContraProJson);
    REQUIRE(set.size() == 1);
    CHECK(set[0].tgt_context.size() == 4);
    CHECK(set[0].example_id == "doc9:12");
    CHECK(set[0].contrastive_tgts.size() == 2);
    testutil::write_file(dir / "bad.json", R"([{"src segment": "x", "errors": []}])");
    CHECK_THROWS_AS(load_contrastive(dir / "bad.json", ContrastiveFormat::kContraProJson), DataError);
  }

  TEST_CASE("channel where context fixes the target") {
    EnumerationModel m(testutil::copy_context_channel());
    const auto& tok = m.tokenizer();
    auto ex = copy_example("c1", "y1", "y0");
    auto with = score_contrastive(m, tok, ex, true, {ContextSide::kTarget, 1});
    CHECK(with.correct_rank == 1);
    CHECK(!with.tie);
    auto without = score_contrastive(m, tok, ex, false, {ContextSide::kTarget, 1});
    CHECK(without.tie);
    CHECK(without.correct_rank == 2);
    auto again = score_contrastive(m, tok, ex, false, {ContextSide::kTarget, 1});
    CHECK(again.ordered.size() == without.ordered.size());
    for (std::size_t i = 0; i < again.ordered.size(); ++i) {
      CHECK(again.ordered[i].candidate == without.ordered[i].candidate);
      CHECK(again.ordered[i].log_prob == without.ordered[i].log_prob);
    }

    auto r = context_usage_indicator(m, tok, ex, {ContextSide::kTarget, 1});
    CHECK(r.indicator == 1);
    CHECK(r.per_sample_cxmi == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("a duplicated candidate is a recorded tie") {
    EnumerationModel m(testutil::copy_context_channel());
    auto ex = copy_example("c0", "y0", "y1");
    ex.contrastive_tgts = {"y0 "};  // encodes like the correct target
    auto r = score_contrastive(m, m.tokenizer(), ex, true, {ContextSide::kTarget, 1});
    CHECK(r.tie);
    CHECK(r.correct_rank == 2);
  }

  TEST_CASE("indicator is a function of the two ranks") {
    CHECK(usage_indicator(1, 2) == 1);
    CHECK(usage_indicator(1, 1) == 0);
    CHECK(usage_indicator(2, 2) == 0);
    CHECK(usage_indicator(2, 1) == 0);
    // context-irrelevant channel: both passes agree
    EnumerationModel m(testutil::identity_channel());
    ContrastiveExample ex;
    ex.example_id = "id";
    ex.tgt_context = {"c0"};
    ex.src = "a b";
    ex.correct_tgt = "A B";
    ex.contrastive_tgts = {"A C"};
    auto r = context_usage_indicator(m, m.tokenizer(), ex, {ContextSide::kTarget, 1});
    CHECK(r.indicator == 0);
    CHECK(r.correct_rank_with_ctx == 1);
    CHECK(r.correct_rank_no_ctx == 1);
  }

  TEST_CASE("accuracy") {
    EnumerationModel m(testutil::copy_context_channel());
    const auto& tok = m.tokenizer();
    std::vector<ContrastiveExample> set{copy_example("c0", "y0", "y1"), copy_example("c1", "y1", "y0")};
    CHECK(accuracy(m, tok, set, true, {ContextSide::kTarget, 1}) == 1.0);
    CHECK(accuracy(m, tok, set, false, {ContextSide::kTarget, 1}) == 0.0);  // ties fail
    for (std::size_t k : {0u, 1u, 3u}) {
      CHECK(accuracy(m, tok, set, false, {ContextSide::kTarget, k}) == 0.0);
    }
    CHECK_THROWS_AS(accuracy(m, tok, {}, true, {ContextSide::kTarget, 1}), ConfigError);
  }

  TEST_CASE("balanced synthetic set is at chance without context") {
    auto set = make_pronoun_contrastive_set(200, 3);
    REQUIRE(set.size() == 400);
    auto tok = Tokenizer::for_words(pronoun_task_words());
    ToyTransformerConfig cfg;
    cfg.model_dim = 16;
    cfg.ff_dim = 32;
    cfg.heads = 2;
    ToyTransformer m(cfg, tok.vocab_size(), 5);
    CHECK(accuracy(m, tok, set, false, {ContextSide::kTarget, 1}) == 0.5);
    for (const auto& ex : set) CHECK_NOTHROW(ex.validate());
  }

  TEST_CASE("reports round trip through CSV") {
    auto dir = testutil::scratch_dir("contrastive_csv");
    EnumerationModel m(testutil::copy_context_channel());
    std::vector<ContrastiveExample> set{copy_example("c0", "y0", "y1"), copy_example("c1", "y1", "y0")};
    auto rep = evaluate_contrastive(m, m.tokenizer(), set, {ContextSide::kTarget, 1});
    CHECK(rep.accuracy_with_ctx == 1.0);
    CHECK(rep.ties_no_ctx == 2);
    write_contrastive_csv(rep, dir / "r.csv");
    auto rows = read_contrastive_csv(dir / "r.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].indicator == rep.results[0].indicator);
    CHECK(rows[1].per_sample_cxmi == rep.results[1].per_sample_cxmi);
    CHECK(rows[1].tie_no_ctx);
  }
}

TEST_SUITE("contrastive") {
  TEST_CASE("synthetic corpus: pronouns agree with the previous noun, ellipsis respects its stride") {
    PronounTaskConfig cfg;
    cfg.documents = 300;
    cfg.p_pronoun = 0.3;
    cfg.p_ellipsis = 0.3;
    const auto corpus = make_pronoun_corpus(cfg);
    const std::map<std::string, std::string> pronoun{{"der", "er"}, {"die", "sie"}, {"das", "es"}};
    std::size_t pronouns = 0, ellipses = 0;
    for (const auto& d : corpus.documents()) {
      std::string article;
      for (const auto& p : d.pairs()) {
        const auto first_tgt = p.target.substr(0, p.target.find(' '));
        if (pronoun.contains(first_tgt)) {
          article = first_tgt;
          if (p.source.starts_with("it ")) ++ellipses;
        } else {
          REQUIRE(!article.empty());
          CHECK(first_tgt == pronoun.at(article));
          ++pronouns;
        }
      }
    }
    CHECK(pronouns > 100);
    CHECK(ellipses > 50);

    // With a huge stride only the first lexicon noun can be elided.
    cfg.ellipsis_stride = 1000;
    std::set<std::string> elided;
    const auto strided = make_pronoun_corpus(cfg);
    for (const auto& d : strided.documents()) {
      for (const auto& p : d.pairs()) {
        // "it ..." also opens plain pronoun sentences; only article-initial targets are ellipses
        if (p.source.starts_with("it ") && pronoun.contains(p.target.substr(0, p.target.find(' '))))
          elided.insert(p.target.substr(0, p.target.find(" ist")));
      }
    }
    CHECK(elided.size() <= 1);
    cfg.ellipsis_stride = 0;
    CHECK_THROWS_AS(make_pronoun_corpus(cfg), ConfigError);
  }
}
