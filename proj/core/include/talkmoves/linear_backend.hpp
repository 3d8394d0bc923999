#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "talkmoves/classifier.hpp"

namespace talkmoves {

// Hashed unigram features over lowercased tokens. Target and prior text use
// separate hash namespaces. Values are L2-normalized presence flags.
struct SparseFeatures {
  std::vector<std::pair<std::uint32_t, double>> entries;  // sorted by index
};

inline constexpr std::uint32_t kLinearFeatureBits = 18;

SparseFeatures extract_features(const AnnotationExample& prepared,
                                std::uint32_t bits = kLinearFeatureBits);

class LinearModelState final : public ModelState {
 public:
  LinearModelState(std::uint32_t bits, std::vector<double> weights, double bias);

  double score(const SparseFeatures& features) const;
  double probability(const SparseFeatures& features) const;
  std::uint32_t bits() const { return bits_; }
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

  // Sparse {"bits", "bias", "weights": [[index, value], ...]}.
  nlohmann::json to_json() const override;
  static std::shared_ptr<const LinearModelState> from_json(const nlohmann::json& json);

 private:
  std::uint32_t bits_;
  std::vector<double> weights_;
  double bias_;
};

// L2-regularized logistic regression trained with seeded SGD. Identical
// (examples, config) always produce identical weights.
class LinearBaselineBackend final : public ClassifierBackend {
 public:
  explicit LinearBaselineBackend(std::uint32_t bits = kLinearFeatureBits) : bits_(bits) {}

  BackendKind kind() const override { return BackendKind::linear_baseline; }
  std::shared_ptr<const ModelState> fit(std::span<const LabeledExample> examples,
                                        const TrainingConfig& config) const override;
  double predict_probability(const ModelState& state,
                             const AnnotationExample& example) const override;
  std::shared_ptr<const ModelState> load_state(const nlohmann::json& json) const override;

 private:
  std::uint32_t bits_;
};

}  // namespace talkmoves
