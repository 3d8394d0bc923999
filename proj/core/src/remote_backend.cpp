#include "talkmoves/remote_backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "talkmoves/errors.hpp"

namespace talkmoves {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_base(const std::string& base_url) {
  Endpoint e;
  auto scheme = base_url.find("://");
  auto path = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) {
    e.origin = base_url;
  } else {
    e.origin = base_url.substr(0, path);
    e.prefix = base_url.substr(path);
    while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  }
  return e;
}

httplib::Client make_client(const RemoteClientOptions& options, const Endpoint& endpoint) {
  httplib::Client client(endpoint.origin);
  const auto timeout = std::chrono::duration<double>(options.request_timeout_seconds);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
  client.set_connection_timeout(static_cast<time_t>(std::max<long long>(secs, 1)), 0);
  client.set_read_timeout(static_cast<time_t>(std::max<long long>(secs, 1)), 0);
  client.set_write_timeout(static_cast<time_t>(std::max<long long>(secs, 1)), 0);
  client.set_bearer_token_auth(options.api_key);
  return client;
}

nlohmann::json check_response(const httplib::Result& res, const std::string& what) {
  if (!res) {
    throw BackendError(what + ": request failed (" + httplib::to_string(res.error()) + ")");
  }
  if (res->status == 401 || res->status == 403) {
    throw AuthError(what + ": service rejected the credentials (HTTP " +
                    std::to_string(res->status) + ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(what + ": HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(what + ": malformed response: " + e.what());
  }
}

std::string require_string(const nlohmann::json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) {
    throw BackendError(what + ": response lacks '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

RemoteClientOptions RemoteClientOptions::from_environment(const BackendOptions& overrides) {
  RemoteClientOptions o;
  if (overrides.api_key) {
    o.api_key = *overrides.api_key;
  } else if (const char* key = std::getenv(kApiKeyEnv)) {
    o.api_key = key;
  }
  if (overrides.base_url) {
    o.base_url = *overrides.base_url;
  } else if (const char* base = std::getenv(kApiBaseEnv); base && *base) {
    o.base_url = base;
  }
  o.poll_interval_seconds = overrides.poll_interval_seconds;
  o.poll_deadline_seconds = overrides.poll_deadline_seconds;
  return o;
}

RemoteClient::RemoteClient(RemoteClientOptions options) : options_(std::move(options)) {}

void RemoteClient::require_credentials() const {
  if (options_.api_key.empty()) {
    throw AuthError(std::string(kApiKeyEnv) + " is not set; refusing to contact the service");
  }
}

std::string RemoteClient::upload_dataset(std::span<const PromptCompletion> records) const {
  require_credentials();
  const Endpoint ep = split_base(options_.base_url);
  auto client = make_client(options_, ep);
  httplib::MultipartFormDataItems items = {
      {"purpose", "fine-tune", "", ""},
      {"file", format_finetune_jsonl(records), "train.jsonl", "application/jsonl"},
  };
  auto res = client.Post((ep.prefix + "/v1/files").c_str(), items);
  return require_string(check_response(res, "file upload"), "id", "file upload");
}

std::string RemoteClient::create_fine_tune(const std::string& file_id,
                                           const TrainingConfig& config) const {
  require_credentials();
  const Endpoint ep = split_base(options_.base_url);
  auto client = make_client(options_, ep);
  nlohmann::json body = {
      {"training_file", file_id}, {"model", config.base_model}, {"n_epochs", config.epochs}};
  auto res = client.Post((ep.prefix + "/v1/fine-tunes").c_str(), body.dump(), "application/json");
  return require_string(check_response(res, "fine-tune launch"), "id", "fine-tune launch");
}

std::string RemoteClient::wait_for_model(const std::string& job_id) const {
  require_credentials();
  const Endpoint ep = split_base(options_.base_url);
  auto client = make_client(options_, ep);
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(options_.poll_deadline_seconds));
  const std::string path = ep.prefix + "/v1/fine-tunes/" + job_id;
  while (true) {
    auto job = check_response(client.Get(path.c_str()), "fine-tune status");
    const std::string status = require_string(job, "status", "fine-tune status");
    if (status == "succeeded") return require_string(job, "fine_tuned_model", "fine-tune status");
    if (status == "failed" || status == "cancelled") {
      throw RemoteJobFailed("fine-tune " + job_id + " " + status + ": " + job.dump());
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TimeoutError("fine-tune " + job_id + " still '" + status + "' at the poll deadline");
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(options_.poll_interval_seconds));
  }
}

std::string RemoteClient::fine_tune(std::span<const PromptCompletion> records,
                                    const TrainingConfig& config) const {
  require_credentials();
  const std::string file_id = upload_dataset(records);
  const std::string job_id = create_fine_tune(file_id, config);
  return wait_for_model(job_id);
}

double RemoteClient::predict_probability(const std::string& model_id,
                                         const std::string& prompt) const {
  require_credentials();
  const Endpoint ep = split_base(options_.base_url);
  auto client = make_client(options_, ep);
  nlohmann::json body = {{"model", model_id}, {"prompt", prompt}, {"max_tokens", 1},
                         {"temperature", 0},  {"logprobs", 2}};
  auto res = client.Post((ep.prefix + "/v1/completions").c_str(), body.dump(), "application/json");
  auto j = check_response(res, "completion");
  if (!j.contains("choices") || !j.at("choices").is_array() || j.at("choices").empty()) {
    throw BackendError("completion: response has no choices");
  }
  return completion_probability(j.at("choices").at(0));
}

double completion_probability(const nlohmann::json& choice) {
  const std::string pos(kPositiveCompletion), neg(kNegativeCompletion);
  std::optional<double> lp_pos, lp_neg;
  if (choice.contains("logprobs") && choice.at("logprobs").is_object()) {
    const auto& lp = choice.at("logprobs");
    if (lp.contains("top_logprobs") && lp.at("top_logprobs").is_array() &&
        !lp.at("top_logprobs").empty() && lp.at("top_logprobs").at(0).is_object()) {
      const auto& top = lp.at("top_logprobs").at(0);
      if (top.contains(pos) && top.at(pos).is_number()) lp_pos = top.at(pos).get<double>();
      if (top.contains(neg) && top.at(neg).is_number()) lp_neg = top.at(neg).get<double>();
    }
  }
  double p;
  if (lp_pos && lp_neg) {
    const double m = std::max(*lp_pos, *lp_neg);
    const double a = std::exp(*lp_pos - m), b = std::exp(*lp_neg - m);
    p = a / (a + b);
  } else if (lp_pos) {
    p = std::exp(*lp_pos);
  } else if (lp_neg) {
    p = 1.0 - std::exp(*lp_neg);
  } else {
    const std::string text = choice.value("text", std::string());
    p = text == pos ? 1.0 : 0.0;
  }
  if (!std::isfinite(p)) p = 0.0;
  return std::clamp(p, 0.0, 1.0);
}

std::shared_ptr<const ModelState> RemoteCompletionBackend::fit(
    std::span<const LabeledExample> examples, const TrainingConfig& config) const {
  std::vector<PromptCompletion> records;
  records.reserve(examples.size());
  for (const auto& ex : examples) records.push_back(remote_finetune_format(ex.example, ex.positive));
  return std::make_shared<RemoteModelState>(client_.fine_tune(records, config));
}

double RemoteCompletionBackend::predict_probability(const ModelState& state,
                                                    const AnnotationExample& example) const {
  const auto* remote = dynamic_cast<const RemoteModelState*>(&state);
  if (!remote) throw BackendError("model state was not produced by the remote backend");
  return client_.predict_probability(remote->model_id(), remote_prompt(example));
}

std::shared_ptr<const ModelState> RemoteCompletionBackend::load_state(const nlohmann::json& json) const {
  if (!json.is_object() || !json.contains("model_id") || !json.at("model_id").is_string()) {
    throw BackendError("remote model state lacks 'model_id'");
  }
  return std::make_shared<RemoteModelState>(json.at("model_id").get<std::string>());
}

}  // namespace talkmoves
