#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ctxmt/contrastive.hpp"
#include "ctxmt/corpus.hpp"

namespace ctxmt {

// A tiny English -> German-like language where the target pronoun
// (er/sie/es) is fixed by the grammatical gender of the noun in the previous
// target sentence, while the source pronoun ("it") carries no gender.
//
// Each document opens with an introduction ("the dog is old ." ->
// "der Hund ist alt ."). Every later sentence is, with the given
// probabilities, a pronoun sentence about the current entity, a repeat
// mentioning the same noun again, or a fresh introduction.
struct PronounTaskConfig {
  std::size_t documents = 5000;
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 6;
  double p_pronoun = 0.4;
  double p_repeat = 0.3;
  // Source says "it", target spells the noun phrase out again: the noun can
  // only be recovered from context.
  double p_ellipsis = 0.0;
  // Only nouns whose lexicon index is a multiple of this stride undergo
  // ellipsis (1 = all nouns).
  std::size_t ellipsis_stride = 1;
  // Besides the 24 base nouns, `extra_nouns` invented ones with random
  // genders; all nouns are drawn with Zipf(zipf_exponent) frequencies.
  std::size_t extra_nouns = 0;
  double zipf_exponent = 0.0;
  // Fraction of nouns with two target translations. An introduction
  // picks one at random; repeats keep the earlier choice (lexical cohesion).
  double homograph_rate = 0.0;
  std::uint64_t lexicon_seed = 7;
  std::uint64_t seed = 1;

  void validate() const;
};

ParallelCorpus make_pronoun_corpus(const PronounTaskConfig& cfg);

// Every word either side of the task can produce (for a word-level tokenizer).
std::vector<std::string> pronoun_task_words(const PronounTaskConfig& cfg = {});

// Balanced two-candidate set: each pronoun sentence appears twice, once after
// a context of gender A and once after gender B, with the two pronouns
// swapping roles. A model that ignores context therefore gets exactly one of
// each pair right (or neither, on a tie). Returns 2 * pairs examples.
std::vector<ContrastiveExample> make_pronoun_contrastive_set(std::size_t pairs, std::uint64_t seed,
                                                             const PronounTaskConfig& cfg = {});

}  // namespace ctxmt
