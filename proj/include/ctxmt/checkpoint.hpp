#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>

#include "ctxmt/augment.hpp"
#include "ctxmt/enumeration.hpp"
#include "ctxmt/tokenizer.hpp"
#include "ctxmt/transformer.hpp"

namespace ctxmt {

// JSON checkpoint: {"format", "kind", ...}. Transformer checkpoints carry the
// model config, the tokenizer fingerprint, the augmentation config used in
// training and the flat parameter vector; enumeration checkpoints carry the
// channel table.
struct LoadedModel {
  std::shared_ptr<const ScoringModel> model;
  std::optional<Tokenizer> tokenizer;  // set for enumeration checkpoints
  std::uint64_t tokenizer_fingerprint = 0;
  std::optional<AugmentConfig> trained_with;
};

void save_checkpoint(const ToyTransformer& model, const Tokenizer& tok, const AugmentConfig& aug,
                     const std::filesystem::path& path);
void save_checkpoint(const EnumerationModel& model, const std::filesystem::path& path);

LoadedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ctxmt
