#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "talkmoves/example_builder.hpp"
#include "talkmoves/labels.hpp"
#include "talkmoves/tokenizer.hpp"

namespace talkmoves {

enum class BackendKind { local_encoder, remote_completion_service, linear_baseline };

std::string_view backend_name(BackendKind kind);
BackendKind parse_backend(std::string_view name);

struct TrainingConfig {
  BackendKind backend = BackendKind::linear_baseline;
  // Fine-tuning epochs for the remote completion service.
  int epochs = 5;
  // Passes over the training data for linear_baseline.
  int passes = 20;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  double decision_threshold = 0.5;
  double l2 = 1e-6;
  // Remote service base model (e.g. "curie", "davinci").
  std::string base_model = "curie";

  void validate() const;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct MoveConfig {
  PreprocessConfig preprocess;
  TrainingConfig training;
};

// Best preprocessing per move, plus epoch / base-model choices for the
// remote completion service. Throws UnknownMoveError.
MoveConfig best_config_for(Move move);
MoveConfig best_config_for(std::string_view move_name);

struct EvalReport {
  Move move = Move::adding_on;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the metric's denominator was zero and the value defaulted to 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

EvalReport report_from_counts(Move move, std::size_t tp, std::size_t fp, std::size_t fn,
                              std::size_t tn);

// Backend-owned trained state. Immutable after training.
class ModelState {
 public:
  virtual ~ModelState() = default;
  virtual nlohmann::json to_json() const = 0;
};

// Everything needed to replay training-time preprocessing at predict time.
struct ModelHandle {
  Move move = Move::adding_on;
  PreprocessConfig preprocess;
  TrainingConfig training;
  std::string tokenizer = "whitespace";
  std::shared_ptr<const ModelState> state;

  double threshold() const { return training.decision_threshold; }
};

struct LabeledExample {
  AnnotationExample example;  // already prepared under the move's profile
  bool positive = false;
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual BackendKind kind() const = 0;
  // Throws BackendError on failure.
  virtual std::shared_ptr<const ModelState> fit(std::span<const LabeledExample> examples,
                                                const TrainingConfig& config) const = 0;
  // Must not depend on anything but the state and the example text.
  virtual double predict_probability(const ModelState& state,
                                     const AnnotationExample& example) const = 0;
  virtual std::shared_ptr<const ModelState> load_state(const nlohmann::json& json) const = 0;
};

struct BackendOptions {
  // Remote service; defaults are read from the environment when empty.
  std::optional<std::string> api_key;
  std::optional<std::string> base_url;
  double poll_interval_seconds = 5.0;
  double poll_deadline_seconds = 4 * 3600.0;
};

// Throws BackendError for backends not available in this build.
std::shared_ptr<const ClassifierBackend> make_backend(BackendKind kind,
                                                      const BackendOptions& options = {});

// Binary view of one move over prepared examples.
std::vector<LabeledExample> binarize(const std::vector<AnnotationExample>& prepared, Move move);

// What the backend actually saw after balancing.
struct TrainingTrace {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Prepares examples under `preprocess`, balances when a factor is set, and
// fits the backend. Only gold labels of `move` are read.
ModelHandle train_move_model(Move move, const std::vector<AnnotationExample>& train_examples,
                             const PreprocessConfig& preprocess, const TrainingConfig& training,
                             const ClassifierBackend& backend, const Tokenizer& tokenizer,
                             TrainingTrace* trace = nullptr);

double predict_probability(const ModelHandle& model, const ClassifierBackend& backend,
                           const AnnotationExample& prepared);

// decision = probability >= threshold. Throws EmptyTestSetError.
EvalReport evaluate(const ModelHandle& model, const ClassifierBackend& backend,
                    const std::vector<AnnotationExample>& test_examples, double threshold,
                    const Tokenizer& tokenizer);

// Per-epoch results of the descending epoch sweep used for the remote
// service: start at `max_epochs` and step down to 1.
struct EpochSweepResult {
  int best_epochs = 0;
  EvalReport best;
  std::vector<std::pair<int, EvalReport>> history;
};
EpochSweepResult epoch_sweep(Move move, const std::vector<AnnotationExample>& train_examples,
                             const std::vector<AnnotationExample>& test_examples,
                             const MoveConfig& config, const ClassifierBackend& backend,
                             const Tokenizer& tokenizer, int max_epochs = 5);

// Fine-tuning record for the completion service.
struct PromptCompletion {
  std::string prompt;
  std::string completion;
};

inline constexpr std::string_view kPromptContextTag = "Context: ";
inline constexpr std::string_view kPromptUtteranceTag = "Utterance: ";
inline constexpr std::string_view kPromptSeparator = "\n\n";
inline constexpr std::string_view kPromptSuffix = "\n\n###\n\n";
inline constexpr std::string_view kPositiveCompletion = " yes";
inline constexpr std::string_view kNegativeCompletion = " no";

// [Context: <prior>\n\n]Utterance: <target>\n\n###\n\n
PromptCompletion remote_finetune_format(const AnnotationExample& prepared, bool gold);
std::string remote_prompt(const AnnotationExample& prepared);

struct ParsedPrompt {
  std::optional<std::string> prior_text;
  std::string target_text;
};
// Throws ValidationError on a prompt not produced by remote_prompt.
ParsedPrompt parse_remote_prompt(std::string_view prompt);

// {"prompt":...,"completion":...} per line, keys in that order.
std::string format_finetune_jsonl(std::span<const PromptCompletion> records);

// Model directory: config.json (schema, move, preprocess, training) and
// state.json (backend state).
void save_model(const ModelHandle& model, const std::filesystem::path& dir);
ModelHandle load_model(const std::filesystem::path& dir, const ClassifierBackend& backend);
// Reads only config.json.
ModelHandle load_model_config(const std::filesystem::path& dir);

nlohmann::json to_json(const PreprocessConfig& config);
PreprocessConfig preprocess_from_json(const nlohmann::json& json,
                                      const PreprocessConfig& defaults = {});
nlohmann::json to_json(const TrainingConfig& config);
TrainingConfig training_from_json(const nlohmann::json& json,
                                  const TrainingConfig& defaults = {});
nlohmann::json to_json(const EvalReport& report);

inline constexpr std::string_view kModelSchema = "talkmoves.model/1";

}  // namespace talkmoves
