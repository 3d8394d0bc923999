#include <fstream>
#include <iterator>

#include "json_util.hpp"
#include "talkmoves/classifier.hpp"
#include "talkmoves/errors.hpp"

namespace talkmoves {
namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 1, e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IOError("write failed for " + path.string());
}

}  // namespace

void save_model(const ModelHandle& model, const std::filesystem::path& dir) {
  if (!model.state) throw BackendError("cannot save a model without trained state");
  std::filesystem::create_directories(dir);
  nlohmann::json config = {{"schema", kModelSchema},
                           {"move", move_name(model.move)},
                           {"backend", backend_name(model.training.backend)},
                           {"tokenizer", model.tokenizer},
                           {"preprocess", to_json(model.preprocess)},
                           {"training", to_json(model.training)}};
  write_json(dir / "config.json", config);
  write_json(dir / "state.json", model.state->to_json());
}

ModelHandle load_model_config(const std::filesystem::path& dir) {
  const auto path = dir / "config.json";
  nlohmann::json config = read_json(path);
  if (config.value("schema", std::string()) != kModelSchema) {
    throw ValidationError(path.string() + ": unsupported model schema");
  }
  ModelHandle model;
  try {
    model.move = parse_move(config.at("move").get<std::string>());
    model.tokenizer = config.value("tokenizer", std::string("whitespace"));
    model.preprocess = preprocess_from_json(config.at("preprocess"));
    model.training = training_from_json(config.at("training"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 1, e.what());
  }
  return model;
}

ModelHandle load_model(const std::filesystem::path& dir, const ClassifierBackend& backend) {
  ModelHandle model = load_model_config(dir);
  if (model.training.backend != backend.kind()) {
    throw BackendError("model in " + dir.string() + " was trained with backend '" +
                       std::string(backend_name(model.training.backend)) + "'");
  }
  model.state = backend.load_state(read_json(dir / "state.json"));
  return model;
}

}  // namespace talkmoves
