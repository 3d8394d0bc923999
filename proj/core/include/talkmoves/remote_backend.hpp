#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "talkmoves/classifier.hpp"

namespace talkmoves {

inline constexpr const char* kApiKeyEnv = "TALKMOVES_API_KEY";
inline constexpr const char* kApiBaseEnv = "TALKMOVES_API_BASE";
inline constexpr const char* kDefaultApiBase = "https://api.openai.com";

struct RemoteClientOptions {
  std::string api_key;
  std::string base_url = kDefaultApiBase;
  double poll_interval_seconds = 5.0;
  double poll_deadline_seconds = 4 * 3600.0;
  double request_timeout_seconds = 60.0;

  // Fills unset fields from TALKMOVES_API_KEY / TALKMOVES_API_BASE.
  static RemoteClientOptions from_environment(const BackendOptions& overrides = {});
};

// Client for a fine-tuning completion service speaking the legacy
// files / fine-tunes / completions HTTP API:
//   POST /v1/files                 multipart upload (purpose=fine-tune)
//   POST /v1/fine-tunes            {"training_file", "model", "n_epochs"}
//   GET  /v1/fine-tunes/{id}       status: pending|running|succeeded|failed
//   POST /v1/completions           {"model","prompt","max_tokens":1,
//                                   "temperature":0,"logprobs":2}
class RemoteClient {
 public:
  explicit RemoteClient(RemoteClientOptions options);

  // Throws AuthError (before any network call when no key is set),
  // RemoteJobFailed, TimeoutError or BackendError.
  std::string upload_dataset(std::span<const PromptCompletion> records) const;
  std::string create_fine_tune(const std::string& file_id, const TrainingConfig& config) const;
  // Polls until the job succeeds and returns the fine-tuned model id.
  std::string wait_for_model(const std::string& job_id) const;

  // Upload + launch + poll. Returns the remote model id.
  std::string fine_tune(std::span<const PromptCompletion> records,
                        const TrainingConfig& config) const;

  // Probability of the positive completion, in [0, 1].
  double predict_probability(const std::string& model_id, const std::string& prompt) const;

  const RemoteClientOptions& options() const { return options_; }

 private:
  void require_credentials() const;

  RemoteClientOptions options_;
};

// Maps the completion response (text + top logprobs of the first token)
// onto P(positive). Both class tokens present: softmax over the two;
// one present: exp(logprob) or its complement; none: the generated text.
double completion_probability(const nlohmann::json& choice);

class RemoteModelState final : public ModelState {
 public:
  explicit RemoteModelState(std::string model_id) : model_id_(std::move(model_id)) {}
  const std::string& model_id() const { return model_id_; }
  nlohmann::json to_json() const override { return {{"model_id", model_id_}}; }

 private:
  std::string model_id_;
};

class RemoteCompletionBackend final : public ClassifierBackend {
 public:
  explicit RemoteCompletionBackend(RemoteClientOptions options) : client_(std::move(options)) {}

  BackendKind kind() const override { return BackendKind::remote_completion_service; }
  std::shared_ptr<const ModelState> fit(std::span<const LabeledExample> examples,
                                        const TrainingConfig& config) const override;
  double predict_probability(const ModelState& state,
                             const AnnotationExample& example) const override;
  std::shared_ptr<const ModelState> load_state(const nlohmann::json& json) const override;

  const RemoteClient& client() const { return client_; }

 private:
  RemoteClient client_;
};

}  // namespace talkmoves
