#include "talkmoves/linear_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "talkmoves/errors.hpp"
#include "talkmoves/hashing.hpp"
#include "talkmoves/text.hpp"

namespace talkmoves {
namespace {

bool is_edge_punct(char c) { return c > 0 && c < 0x7f && std::ispunct(static_cast<unsigned char>(c)); }

// Lowercased tokens with leading / trailing ASCII punctuation removed. A
// token made only of punctuation is kept as-is so "?" stays a feature.
std::vector<std::string> feature_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : split_whitespace(text)) {
    std::size_t b = 0, e = tok.size();
    while (b < e && is_edge_punct(tok[b])) ++b;
    while (e > b && is_edge_punct(tok[e - 1])) --e;
    std::string core = b < e ? tok.substr(b, e - b) : tok;
    out.push_back(to_lower_ascii(core));
    if (e < tok.size() && tok[tok.size() - 1] == '?') out.emplace_back("?");
  }
  return out;
}

void add_unigrams(std::string_view ns, std::string_view text, std::uint64_t mask,
                  std::vector<std::uint32_t>& indices) {
  std::string key;
  for (const auto& tok : feature_tokens(text)) {
    key.assign(ns).append(tok);
    indices.push_back(static_cast<std::uint32_t>(fnv1a64(key) & mask));
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

SparseFeatures extract_features(const AnnotationExample& prepared, std::uint32_t bits) {
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  std::vector<std::uint32_t> indices;
  add_unigrams("t:", prepared.target_text, mask, indices);
  if (prepared.prior_text) add_unigrams("p:", *prepared.prior_text, mask, indices);
  std::sort(indices.begin(), indices.end());

  SparseFeatures f;
  for (std::size_t i = 0; i < indices.size();) {
    std::size_t j = i;
    while (j < indices.size() && indices[j] == indices[i]) ++j;
    f.entries.emplace_back(indices[i], 1.0);
    i = j;
  }
  // Binary presence, L2-normalized.
  const double norm = std::sqrt(static_cast<double>(f.entries.size()));
  for (auto& [_, v] : f.entries) v /= norm;
  return f;
}

LinearModelState::LinearModelState(std::uint32_t bits, std::vector<double> weights, double bias)
    : bits_(bits), weights_(std::move(weights)), bias_(bias) {
  if (weights_.size() != (std::size_t{1} << bits_)) {
    throw BackendError("linear model weight vector does not match its feature width");
  }
}

double LinearModelState::score(const SparseFeatures& features) const {
  double z = bias_;
  for (const auto& [idx, v] : features.entries) z += weights_[idx] * v;
  return z;
}

double LinearModelState::probability(const SparseFeatures& features) const {
  return sigmoid(score(features));
}

nlohmann::json LinearModelState::to_json() const {
  nlohmann::json sparse = nlohmann::json::array();
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] != 0.0) sparse.push_back({i, weights_[i]});
  }
  return {{"kind", "linear_baseline"}, {"bits", bits_}, {"bias", bias_}, {"weights", sparse}};
}

std::shared_ptr<const LinearModelState> LinearModelState::from_json(const nlohmann::json& j) {
  try {
    const auto bits = j.at("bits").get<std::uint32_t>();
    if (bits == 0 || bits > 26) throw BackendError("linear model feature width out of range");
    std::vector<double> weights(std::size_t{1} << bits, 0.0);
    for (const auto& entry : j.at("weights")) {
      const auto idx = entry.at(0).get<std::size_t>();
      if (idx >= weights.size()) throw BackendError("linear model weight index out of range");
      weights[idx] = entry.at(1).get<double>();
    }
    return std::make_shared<LinearModelState>(bits, std::move(weights), j.at("bias").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed linear model state: ") + e.what());
  }
}

std::shared_ptr<const ModelState> LinearBaselineBackend::fit(
    std::span<const LabeledExample> examples, const TrainingConfig& config) const {
  if (examples.empty()) throw BackendError("no training examples");
  std::vector<SparseFeatures> features;
  features.reserve(examples.size());
  for (const auto& ex : examples) features.push_back(extract_features(ex.example, bits_));

  std::vector<double> w(std::size_t{1} << bits_, 0.0);
  double b = 0.0;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  // AdaGrad: per-feature step sizes shrink with accumulated squared gradient.
  std::vector<double> g2(w.size(), 0.0);
  double b_g2 = 0.0;
  constexpr double kEps = 1e-8;
  for (int epoch = 0; epoch < config.passes; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto& f = features[i];
      double z = b;
      for (const auto& [idx, v] : f.entries) z += w[idx] * v;
      const double g = sigmoid(z) - (examples[i].positive ? 1.0 : 0.0);
      for (const auto& [idx, v] : f.entries) {
        const double grad = g * v + config.l2 * w[idx];
        g2[idx] += grad * grad;
        w[idx] -= config.learning_rate * grad / std::sqrt(g2[idx] + kEps);
      }
      b_g2 += g * g;
      b -= config.learning_rate * g / std::sqrt(b_g2 + kEps);
    }
  }
  return std::make_shared<LinearModelState>(bits_, std::move(w), b);
}

double LinearBaselineBackend::predict_probability(const ModelState& state,
                                                  const AnnotationExample& example) const {
  const auto* linear = dynamic_cast<const LinearModelState*>(&state);
  if (!linear) throw BackendError("model state was not produced by linear_baseline");
  return linear->probability(extract_features(example, linear->bits()));
}

std::shared_ptr<const ModelState> LinearBaselineBackend::load_state(const nlohmann::json& json) const {
  return LinearModelState::from_json(json);
}

}  // namespace talkmoves
