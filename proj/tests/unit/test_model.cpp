#include <cmath>

#include <nlohmann/json.hpp>

#include "../support/gradcheck.hpp"
#include "ctxmt/checkpoint.hpp"
#include "ctxmt/decoding.hpp"
#include "ctxmt/enumeration.hpp"
#include "ctxmt/errors.hpp"
#include "ctxmt/training.hpp"
#include "ctxmt/transformer.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace ctxmt;

namespace {

ToyTransformerConfig tiny(std::size_t dim = 8) {
  ToyTransformerConfig c;
  c.layers = 2;
  c.heads = 2;
  c.model_dim = dim;
  c.ff_dim = 2 * dim;
  c.max_positions = 64;
  c.dropout = 0.1;
  return c;
}

TranslationExample context_example() {
  return {{{10, 11}, {12}}, {{20, 21, 22}}, {13, 14, 15}, {23, 24, 25, 26}};
}

}  // namespace

TEST_SUITE("transformer") {
  TEST_CASE("distributions are normalised, finite and non-positive") {
    ToyTransformer m(tiny(16), 40, 3);
    auto lp = m.log_distributions(context_example());
    REQUIRE(lp.rows() == 5);
    REQUIRE(lp.cols() == 40);
    for (Eigen::Index r = 0; r < lp.rows(); ++r) {
      CHECK(std::abs(lp.row(r).array().exp().sum() - 1.0) < 1e-5);
      CHECK(lp.row(r).maxCoeff() <= 0.0);
      CHECK(lp.row(r).allFinite());
    }
  }

  TEST_CASE("evaluation is deterministic") {
    ToyTransformer m(tiny(16), 40, 3);
    CHECK(m.score(context_example()) == m.score(context_example()));
  }

  TEST_CASE("analytic gradients match central differences") {
    ToyTransformer m(tiny(8), 30, 11);
    std::vector<TranslationExample> batch{context_example(), {{}, {}, {13, 14}, {23}}};
    auto gc = testutil::gradient_check(m, batch, 0.1, 100, 5);
    CHECK(gc.checked == 100);
    CHECK(gc.worst_relative_error < 1e-3);
  }

  TEST_CASE("causality: y_t only affects later positions") {
    ToyTransformer m(tiny(16), 40, 3);
    auto ex = context_example();
    auto base = m.log_distributions(ex);
    auto changed = ex;
    changed.tgt[2] = 30;
    auto after = m.log_distributions(changed);
    for (Eigen::Index r = 0; r <= 2; ++r) CHECK((base.row(r) - after.row(r)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((base.row(3) - after.row(3)).cwiseAbs().maxCoeff() > 0.0);

    auto ctx_changed = ex;
    ctx_changed.tgt_context[0][0] = 31;
    auto ctx_after = m.log_distributions(ctx_changed);
    CHECK((base.row(0) - ctx_after.row(0)).cwiseAbs().maxCoeff() > 0.0);
    auto src_ctx_changed = ex;
    src_ctx_changed.src_context[1][0] = 31;
    CHECK((base - m.log_distributions(src_ctx_changed)).cwiseAbs().maxCoeff() > 0.0);
  }

  TEST_CASE("inputs beyond the model's limits are data errors") {
    auto cfg = tiny(8);
    cfg.max_positions = 6;
    ToyTransformer m(cfg, 30, 1);
    CHECK_THROWS_AS(m.log_distributions({{}, {}, {10, 11, 12, 13, 14, 15, 16}, {20}}), DataError);
    ToyTransformer m2(tiny(8), 30, 1);
    CHECK_THROWS_AS(m2.log_distributions({{}, {}, {10, 99}, {20}}), DataError);
  }

  TEST_CASE("config validation and JSON round trip") {
    auto cfg = tiny(8);
    nlohmann::json j = cfg;
    auto back = j.get<ToyTransformerConfig>();
    CHECK(back.model_dim == 8);
    CHECK(back.heads == 2);
    cfg.heads = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_SUITE("training") {
  TEST_CASE("learning-rate schedule") {
    TrainConfig c;
    c.peak_lr = 1e-3;
    c.warmup_steps = 400;
    CHECK(lr_schedule(400, c) == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(lr_schedule(100, c) == doctest::Approx(2.5e-4).epsilon(1e-12));
    CHECK(lr_schedule(1600, c) == doctest::Approx(5e-4).epsilon(1e-12));
  }

  ParallelCorpus repeated_pair(int n) {
    std::vector<ParallelDocument> docs;
    for (int i = 0; i < n; ++i) docs.push_back({"d" + std::to_string(i), {{"the cat sleeps", "die katze schläft"}}});
    return ParallelCorpus(docs);
  }

  TEST_CASE("memorises a repeated pair") {
    auto corpus = repeated_pair(50);
    auto tok = Tokenizer::train(corpus, 64);
    auto mc = tiny(32);
    mc.dropout = 0.0;
    TrainConfig tc;
    tc.peak_lr = 3e-3;
    tc.warmup_steps = 50;
    tc.max_steps = 500;
    tc.batch_size = 8;
    tc.eval_every = 100;
    tc.label_smoothing = 0.0;
    AugmentConfig ac;
    ac.k_min = ac.k_max = 0;
    auto res = train(corpus, tok, mc, tc, ac);
    auto ex = assemble_example(encode_document(corpus[0], tok), 0, 0, 0);
    auto stats = res.model.evaluate_loss(ex, 0.0);
    CHECK(stats.nll_sum / static_cast<double>(stats.tokens) < 0.1);
  }

  TEST_CASE("zero learning rate leaves parameters unchanged") {
    auto corpus = repeated_pair(12);
    auto tok = Tokenizer::train(corpus, 64);
    TrainConfig tc;
    tc.peak_lr = 0.0;
    tc.warmup_steps = 5;
    tc.max_steps = 20;
    tc.eval_every = 10;
    tc.batch_size = 4;
    AugmentConfig ac;
    auto res = train(corpus, tok, tiny(8), tc, ac);
    Rng seeds(tc.seed);  // training draws the init seed first
    ToyTransformer fresh(tiny(8), tok.vocab_size(), seeds.fork_seed());
    CHECK(std::equal(fresh.parameters().begin(), fresh.parameters().end(), res.model.parameters().begin()));
  }

  TEST_CASE("same seeds give the same validation trace") {
    std::vector<ParallelDocument> docs;
    for (int i = 0; i < 30; ++i) {
      docs.push_back({"d" + std::to_string(i),
                      {{"a b c", "x y z"}, {"b c a", "y z x"}, {"c a", "z x"}}});
    }
    ParallelCorpus corpus(docs);
    auto tok = Tokenizer::train(corpus, 40);
    TrainConfig tc;
    tc.peak_lr = 1e-3;
    tc.warmup_steps = 10;
    tc.max_steps = 40;
    tc.eval_every = 10;
    tc.batch_size = 4;
    AugmentConfig ac;
    ac.coword_p = 0.2;
    ac.k_max = 2;
    auto a = train(corpus, tok, tiny(8), tc, ac);
    auto b = train(corpus, tok, tiny(8), tc, ac);
    CHECK(a.valid_ppl_trace == b.valid_ppl_trace);
    CHECK(a.valid_ppl_trace.size() == 4);
    CHECK(std::equal(a.model.parameters().begin(), a.model.parameters().end(), b.model.parameters().begin()));
    for (std::size_t i = 1; i < a.log.size(); ++i) CHECK(a.log[i].step > a.log[i - 1].step);
  }
}

TEST_SUITE("enumeration") {
  TEST_CASE("deterministic channel scores zero per token") {
    EnumerationModel m(testutil::identity_channel());
    const auto& tok = m.tokenizer();
    TranslationExample ex{{}, {tok.encode("c1")}, tok.encode("a b c"), tok.encode("A B C")};
    for (double v : m.score(ex)) CHECK(v == 0.0);
  }

  TEST_CASE("uniform channel scores log 1/2 per symbol") {
    auto ch = EnumerationChannel::build({"c"}, {"x0", "x1"}, {"y0", "y1"}, {1.0}, {0.5, 0.5},
                                        [](std::size_t, std::size_t) { return std::vector<double>{0.5, 0.5}; });
    EnumerationModel m(ch);
    const auto& tok = m.tokenizer();
    auto s = m.score({{}, {}, tok.encode("x0 x1"), tok.encode("y1 y0")});
    REQUIRE(s.size() == 3);
    CHECK(s[0] == doctest::Approx(std::log(0.5)));
    CHECK(s[1] == doctest::Approx(std::log(0.5)));
    CHECK(s[2] == 0.0);  // EOS after the source length
  }

  TEST_CASE("context changes the score by log p(y|c) - log p(y)") {
    EnumerationModel m(testutil::mixed_channel());
    const auto& tok = m.tokenizer();
    // y = c w.p. 0.8, else x: p(y0 | c0, x1) = 0.8, p(y0 | c1, x1) = 0,
    // so with c uniform p(y0 | x1) = 0.4.
    auto with = m.score({{}, {tok.encode("c0")}, tok.encode("x1"), tok.encode("y0")});
    auto without = m.score({{}, {}, tok.encode("x1"), tok.encode("y0")});
    CHECK(with[0] == doctest::Approx(std::log(0.8)));
    CHECK(without[0] == doctest::Approx(std::log(0.4)));
  }

  TEST_CASE("zero-probability conditioning events are errors") {
    auto ch = EnumerationChannel::build({"c0", "c1"}, {"x0", "x1"}, {"y0", "y1"}, {1.0, 0.0}, {0.5, 0.5},
                                        [](std::size_t, std::size_t) { return std::vector<double>{0.5, 0.5}; });
    EnumerationModel m(ch);
    CHECK_THROWS_AS(m.conditional(1, 0), NumericalError);
  }

  TEST_CASE("independent channel is context-blind") {
    auto ch = EnumerationChannel::build({"c0", "c1"}, {"x0"}, {"y0", "y1"}, {0.3, 0.7}, {1.0},
                                        [](std::size_t, std::size_t) { return std::vector<double>{0.25, 0.75}; });
    EnumerationModel m(ch);
    const auto& tok = m.tokenizer();
    auto with = m.score({{}, {tok.encode("c1")}, tok.encode("x0"), tok.encode("y1")});
    auto without = m.score({{}, {}, tok.encode("x0"), tok.encode("y1")});
    REQUIRE(with.size() == without.size());
    for (std::size_t i = 0; i < with.size(); ++i) CHECK(std::abs(with[i] - without[i]) < 1e-12);
  }

  TEST_CASE("channel JSON round trip") {
    auto ch = testutil::mixed_channel();
    nlohmann::json j = ch;
    auto back = j.get<EnumerationChannel>();
    CHECK(back.joint == ch.joint);
    CHECK(back.target_symbols == ch.target_symbols);
    j["joint"][0] = 5.0;
    CHECK_THROWS_AS(j.get<EnumerationChannel>(), ConfigError);
  }
}

TEST_SUITE("decoding") {
  TEST_CASE("identity channel decodes the source symbol for symbol") {
    EnumerationModel m(testutil::identity_channel());
    std::vector<std::string> doc{"a b c", "c c", "b a"};
    for (std::size_t beam : {1u, 3u}) {
      auto out = decode_document(m, doc, m.tokenizer(), {ContextSide::kTarget, 1}, beam);
      CHECK(out == std::vector<std::string>{"A B C", "C C", "B A"});
    }
  }

  TEST_CASE("beam of one equals greedy") {
    ToyTransformer m(tiny(16), 40, 9);
    for (int i = 0; i < 5; ++i) {
      TranslationExample ex{{}, {{20 + i, 21}}, {10 + i, 11, 12}, {}};
      CHECK(beam_decode(m, ex, 1, 12) == greedy_decode(m, ex, 12));
    }
  }

  TEST_CASE("empty context decodes sentences independently") {
    ToyTransformer m(tiny(16), 40, 9);
    auto tok = Tokenizer::train(std::vector<std::string>{"a b c d e f g h i j k l m n o"}, 40);
    std::vector<std::string> doc{"a b", "c d e", "f"};
    auto together = decode_document(m, doc, tok, {ContextSide::kTarget, 0}, 1);
    for (std::size_t i = 0; i < doc.size(); ++i) {
      CHECK(together[i] == decode_document(m, {doc[i]}, tok, {ContextSide::kTarget, 0}, 1)[0]);
    }
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("transformer round trip preserves scores and metadata") {
    auto dir = testutil::scratch_dir("ckpt");
    auto tok = Tokenizer::train(std::vector<std::string>{"a b c d e"}, 30);
    ToyTransformer m(tiny(8), tok.vocab_size(), 4);
    AugmentConfig ac;
    ac.coword_p = 0.1;
    ac.k_max = 3;
    save_checkpoint(m, tok, ac, dir / "m.json");
    auto loaded = load_checkpoint(dir / "m.json");
    CHECK(loaded.tokenizer_fingerprint == tok.fingerprint());
    REQUIRE(loaded.trained_with.has_value());
    CHECK(loaded.trained_with->k_max == 3);
    auto ex = context_example();
    for (auto* seq : {&ex.src, &ex.tgt}) for (auto& t : *seq) t = 8 + t % 10;
    for (auto& s : ex.src_context) for (auto& t : s) t = 8 + t % 10;
    for (auto& s : ex.tgt_context) for (auto& t : s) t = 8 + t % 10;
    CHECK(loaded.model->score(ex) == m.score(ex));
    save_checkpoint(dynamic_cast<const ToyTransformer&>(*loaded.model), tok, ac, dir / "m2.json");
    CHECK(testutil::read_file(dir / "m.json") == testutil::read_file(dir / "m2.json"));
  }

  TEST_CASE("enumeration round trip") {
    auto dir = testutil::scratch_dir("ckpt_enum");
    EnumerationModel m(testutil::mixed_channel());
    save_checkpoint(m, dir / "e.json");
    auto loaded = load_checkpoint(dir / "e.json");
    REQUIRE(loaded.tokenizer.has_value());
    const auto& tok = *loaded.tokenizer;
    TranslationExample ex{{}, {tok.encode("c1")}, tok.encode("x0 x1"), tok.encode("y1 y1")};
    CHECK(loaded.model->score(ex) == m.score(ex));
  }

  TEST_CASE("garbage is a data error") {
    auto dir = testutil::scratch_dir("ckpt_bad");
    testutil::write_file(dir / "x.json", "{\"format\": \"nope\"}");
    CHECK_THROWS_AS(load_checkpoint(dir / "x.json"), DataError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), DataError);
  }
}
