#include "ctxmt/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxmt/errors.hpp"

namespace ctxmt {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "ctxmt-checkpoint-v1";

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump() << '\n';
}

}  // namespace

void save_checkpoint(const ToyTransformer& model, const Tokenizer& tok, const AugmentConfig& aug,
                     const std::filesystem::path& path) {
  json j{{"format", kFormat},
         {"kind", "transformer"},
         {"model_cfg", model.config()},
         {"vocab_size", model.vocab_size()},
         {"tokenizer_fingerprint", hex64(tok.fingerprint())},
         {"augment", aug}};
  const auto params = model.parameters();
  j["params"] = std::vector<double>(params.begin(), params.end());
  write_json(j, path);
}

void save_checkpoint(const EnumerationModel& model, const std::filesystem::path& path) {
  write_json(json{{"format", kFormat}, {"kind", "enumeration"}, {"channel", model.channel()}}, path);
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) {
      throw DataError("unsupported checkpoint format in " + path.string());
    }
    const auto kind = j.at("kind").get<std::string>();
    LoadedModel out;
    if (kind == "transformer") {
      auto cfg = j.at("model_cfg").get<ToyTransformerConfig>();
      auto model = std::make_shared<ToyTransformer>(cfg, j.at("vocab_size").get<std::size_t>(),
                                                    j.at("params").get<std::vector<double>>());
      out.model = std::move(model);
      out.tokenizer_fingerprint =
          std::stoull(j.at("tokenizer_fingerprint").get<std::string>(), nullptr, 16);
      if (j.contains("augment")) out.trained_with = j.at("augment").get<AugmentConfig>();
    } else if (kind == "enumeration") {
      auto model = std::make_shared<EnumerationModel>(j.at("channel").get<EnumerationChannel>());
      out.tokenizer = model->tokenizer();
      out.tokenizer_fingerprint = out.tokenizer->fingerprint();
      out.model = std::move(model);
    } else {
      throw DataError("unknown checkpoint kind '" + kind + "'");
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace ctxmt
