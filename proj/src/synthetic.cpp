#include "ctxmt/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "ctxmt/errors.hpp"
#include "ctxmt/random.hpp"

namespace ctxmt {

namespace {

struct Noun {
  const char* en;
  const char* de;
  int gender;  // 0 m, 1 f, 2 n
};

constexpr std::array<Noun, 24> kNouns{{
    {"dog", "Hund", 0},    {"garden", "Garten", 0}, {"tree", "Baum", 0},   {"car", "Wagen", 0},
    {"chair", "Stuhl", 0}, {"table", "Tisch", 0},   {"spoon", "Löffel", 0}, {"coat", "Mantel", 0},
    {"cat", "Katze", 1},   {"lamp", "Lampe", 1},    {"door", "Tür", 1},     {"flower", "Blume", 1},
    {"cup", "Tasse", 1},   {"bag", "Tasche", 1},    {"street", "Straße", 1}, {"clock", "Uhr", 1},
    {"house", "Haus", 2},  {"book", "Buch", 2},     {"window", "Fenster", 2}, {"bed", "Bett", 2},
    {"boat", "Boot", 2},   {"glass", "Glas", 2},    {"picture", "Bild", 2}, {"horse", "Pferd", 2},
}};

constexpr std::array<std::array<const char*, 2>, 8> kPredicates{{
    {"old", "alt"}, {"new", "neu"}, {"big", "groß"}, {"small", "klein"},
    {"here", "hier"}, {"there", "dort"}, {"red", "rot"}, {"green", "grün"},
}};

constexpr std::array<const char*, 3> kArticles{"der", "die", "das"};
constexpr std::array<const char*, 3> kPronouns{"er", "sie", "es"};

std::size_t pick(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
}

struct Entry {
  std::string en;
  std::string de;
  int gender;
  std::string de_alt;  // second translation of a homograph, else empty
};

struct Lexicon {
  std::vector<Entry> nouns;
  std::vector<double> cumulative;  // Zipf CDF over `nouns`

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative.begin()), nouns.size() - 1);
  }
};

// Invented nouns are consonant-vowel syllable strings; the target form is
// the capitalized source form, the gender is random.
Lexicon make_lexicon(const PronounTaskConfig& cfg) {
  Lexicon lex;
  std::set<std::string> taken;
  Rng rng(cfg.lexicon_seed);
  for (const auto& n : kNouns) {
    const bool homograph = rng.uniform() < cfg.homograph_rate;
    lex.nouns.push_back({n.en, n.de, n.gender, homograph ? std::string(n.de) + "e" : std::string()});
    taken.insert(n.en);
  }
  static constexpr std::string_view kCons = "bdfgklmnprstvz";
  static constexpr std::string_view kVow = "aeiou";
  while (lex.nouns.size() < kNouns.size() + cfg.extra_nouns) {
    std::string w;
    const std::size_t syll = 2 + pick(rng, 2);
    for (std::size_t i = 0; i < syll; ++i) {
      w += kCons[pick(rng, kCons.size())];
      w += kVow[pick(rng, kVow.size())];
    }
    if (!taken.insert(w).second) continue;
    std::string de = w;
    de[0] = static_cast<char>(de[0] - 'a' + 'A');
    const int gender = static_cast<int>(pick(rng, 3));
    const bool homograph = rng.uniform() < cfg.homograph_rate;
    lex.nouns.push_back({w, de, gender, homograph ? de + "e" : std::string()});
  }
  // base nouns take the top ranks
  double total = 0.0;
  for (std::size_t r = 0; r < lex.nouns.size(); ++r) {
    total += std::pow(static_cast<double>(r + 1), -cfg.zipf_exponent);
    lex.cumulative.push_back(total);
  }
  return lex;
}

SentencePair noun_sentence(const Entry& noun, bool alt, std::size_t pred) {
  return {"the " + noun.en + " is " + kPredicates[pred][0] + " .",
          std::string(kArticles[noun.gender]) + " " + (alt ? noun.de_alt : noun.de) + " ist " +
              kPredicates[pred][1] + " ."};
}

SentencePair pronoun_sentence(int gender, std::size_t pred) {
  return {std::string("it is ") + kPredicates[pred][0] + " .",
          std::string(kPronouns[gender]) + " ist " + kPredicates[pred][1] + " ."};
}

}  // namespace

void PronounTaskConfig::validate() const {
  if (documents == 0) throw ConfigError("pronoun task: documents must be positive");
  if (min_sentences < 1 || min_sentences > max_sentences) {
    throw ConfigError("pronoun task: need 1 <= min_sentences <= max_sentences");
  }
  if (ellipsis_stride == 0) throw ConfigError("pronoun task: ellipsis_stride must be positive");
  if (p_pronoun < 0 || p_repeat < 0 || p_ellipsis < 0 || p_pronoun + p_repeat + p_ellipsis > 1) {
    throw ConfigError("pronoun task: sentence-type probabilities must be non-negative and sum to at most 1");
  }
}

ParallelCorpus make_pronoun_corpus(const PronounTaskConfig& cfg) {
  cfg.validate();
  const auto lex = make_lexicon(cfg);
  Rng rng(cfg.seed);
  std::vector<ParallelDocument> docs;
  docs.reserve(cfg.documents);
  for (std::size_t d = 0; d < cfg.documents; ++d) {
    const std::size_t len = cfg.min_sentences + pick(rng, cfg.max_sentences - cfg.min_sentences + 1);
    std::vector<SentencePair> pairs;
    std::size_t entity = lex.draw(rng);
    bool alt = !lex.nouns[entity].de_alt.empty() && rng.bernoulli(0.5);
    pairs.push_back(noun_sentence(lex.nouns[entity], alt, pick(rng, kPredicates.size())));
    for (std::size_t s = 1; s < len; ++s) {
      const double u = rng.uniform();
      const std::size_t pred = pick(rng, kPredicates.size());
      if (u < cfg.p_pronoun) {
        pairs.push_back(pronoun_sentence(lex.nouns[entity].gender, pred));
      } else if (u < cfg.p_pronoun + cfg.p_repeat) {
        pairs.push_back(noun_sentence(lex.nouns[entity], alt, pred));
      } else if (u < cfg.p_pronoun + cfg.p_repeat + cfg.p_ellipsis && entity % cfg.ellipsis_stride == 0) {
        auto pair = noun_sentence(lex.nouns[entity], alt, pred);
        pair.source = pronoun_sentence(0, pred).source;
        pairs.push_back(std::move(pair));
      } else {
        entity = lex.draw(rng);
        alt = !lex.nouns[entity].de_alt.empty() && rng.bernoulli(0.5);
        pairs.push_back(noun_sentence(lex.nouns[entity], alt, pred));
      }
    }
    docs.emplace_back("doc" + std::to_string(d), std::move(pairs));
  }
  return ParallelCorpus(std::move(docs));
}

std::vector<std::string> pronoun_task_words(const PronounTaskConfig& cfg) {
  std::set<std::string> words{"the", "is", "it", "ist", "."};
  for (const auto& n : make_lexicon(cfg).nouns) {
    words.insert(n.en);
    words.insert(n.de);
    if (!n.de_alt.empty()) words.insert(n.de_alt);
  }
  for (const auto& p : kPredicates) {
    words.insert(p[0]);
    words.insert(p[1]);
  }
  for (const auto* a : kArticles) words.insert(a);
  for (const auto* p : kPronouns) words.insert(p);
  return {words.begin(), words.end()};
}

std::vector<ContrastiveExample> make_pronoun_contrastive_set(std::size_t pairs, std::uint64_t seed,
                                                             const PronounTaskConfig& cfg) {
  if (pairs == 0) throw ConfigError("contrastive set: pairs must be positive");
  const auto lex = make_lexicon(cfg);
  Rng rng(seed);
  std::vector<ContrastiveExample> out;
  out.reserve(2 * pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    const int ga = static_cast<int>(pick(rng, 3));
    const int gb = (ga + 1 + static_cast<int>(pick(rng, 2))) % 3;
    const std::size_t pred = pick(rng, kPredicates.size());
    const auto cand_a = pronoun_sentence(ga, pred);
    const auto cand_b = pronoun_sentence(gb, pred);
    const std::array<int, 2> genders{ga, gb};
    for (int side = 0; side < 2; ++side) {
      // a context noun of the required gender
      std::size_t n;
      do {
        n = lex.draw(rng);
      } while (lex.nouns[n].gender != genders[side]);
      const bool alt = !lex.nouns[n].de_alt.empty() && rng.bernoulli(0.5);
      const auto ctx = noun_sentence(lex.nouns[n], alt, pick(rng, kPredicates.size()));
      ContrastiveExample ex;
      ex.example_id = "pair" + std::to_string(i) + (side == 0 ? "a" : "b");
      ex.src_context = {ctx.source};
      ex.tgt_context = {ctx.target};
      ex.src = cand_a.source;
      ex.correct_tgt = side == 0 ? cand_a.target : cand_b.target;
      ex.contrastive_tgts = {side == 0 ? cand_b.target : cand_a.target};
      ex.phenomenon = Phenomenon::kPronoun;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace ctxmt
