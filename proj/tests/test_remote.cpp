#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "support/mock_service.hpp"
#include "talkmoves/errors.hpp"
#include "talkmoves/remote_backend.hpp"

using namespace talkmoves;
using talkmoves::testing::MockService;

namespace {

RemoteClientOptions options_for(const MockService& svc, const std::string& key = "test-key") {
  RemoteClientOptions o;
  o.api_key = key;
  o.base_url = svc.base_url();
  o.poll_interval_seconds = 0.01;
  o.poll_deadline_seconds = 2.0;
  o.request_timeout_seconds = 5.0;
  return o;
}

std::vector<PromptCompletion> records() {
  AnnotationExample a, b;
  a.target_text = "Anybody want to share?";
  b.target_text = "Good.";
  b.prior_text = "STUDENT: I got 12";
  return {remote_finetune_format(a, true), remote_finetune_format(b, false)};
}

}  // namespace

TEST(Remote, UploadsExactJsonl) {
  MockService svc;
  RemoteClient client(options_for(svc));
  auto recs = records();
  TrainingConfig cfg;
  cfg.epochs = 3;
  cfg.base_model = "curie";
  const std::string model = client.fine_tune(recs, cfg);
  EXPECT_EQ(model, "curie:ft-mock-ft-1");
  auto ups = svc.uploads();
  ASSERT_EQ(ups.size(), 1u);
  EXPECT_EQ(ups[0].purpose, "fine-tune");
  EXPECT_EQ(ups[0].content,
            "{\"prompt\":\"Utterance: Anybody want to share?\\n\\n###\\n\\n\",\"completion\":\" yes\"}\n"
            "{\"prompt\":\"Context: STUDENT: I got 12\\n\\nUtterance: Good.\\n\\n###\\n\\n\","
            "\"completion\":\" no\"}\n");
  auto jobs = svc.jobs();
  ASSERT_EQ(jobs.size(), 1u);
  EXPECT_EQ(jobs[0].at("training_file"), "file-1");
  EXPECT_EQ(jobs[0].at("model"), "curie");
  EXPECT_EQ(jobs[0].at("n_epochs"), 3);
}

TEST(Remote, MissingKeyFailsBeforeAnyRequest) {
  MockService svc;
  RemoteClient client(options_for(svc, ""));
  EXPECT_THROW(client.fine_tune(records(), {}), AuthError);
  EXPECT_EQ(svc.requests(), 0);
}

TEST(Remote, RejectedKeyIsAuthError) {
  MockService svc;
  RemoteClient client(options_for(svc, "wrong"));
  EXPECT_THROW(client.fine_tune(records(), {}), AuthError);
  EXPECT_TRUE(svc.uploads().empty());
  EXPECT_EQ(svc.rejected(), 1);
}

TEST(Remote, PollingStatuses) {
  MockService svc;
  svc.set_statuses({"pending", "running", "succeeded"});
  RemoteClient client(options_for(svc));
  EXPECT_EQ(client.wait_for_model("ft-9"), "curie:ft-mock-ft-9");
  EXPECT_EQ(svc.polls(), 3);

  svc.set_statuses({"running", "failed"});
  EXPECT_THROW(client.wait_for_model("ft-9"), RemoteJobFailed);

  svc.set_statuses({"running"});
  auto o = options_for(svc);
  o.poll_deadline_seconds = 0.05;
  EXPECT_THROW(RemoteClient(o).wait_for_model("ft-9"), TimeoutError);
}

TEST(Remote, UnreachableServiceIsBackendError) {
  RemoteClientOptions o;
  o.api_key = "k";
  o.base_url = "http://127.0.0.1:1";
  o.request_timeout_seconds = 1.0;
  EXPECT_THROW(RemoteClient(o).upload_dataset(records()), BackendError);
}

TEST(Remote, CompletionRequestAndProbability) {
  MockService svc;
  RemoteClient client(options_for(svc));
  const double p = client.predict_probability("m1", "Utterance: x\n\n###\n\n");
  const double expect = std::exp(-0.1) / (std::exp(-0.1) + std::exp(-2.4));
  EXPECT_NEAR(p, expect, 1e-12);
  auto c = svc.completions();
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].at("model"), "m1");
  EXPECT_EQ(c[0].at("max_tokens"), 1);
  EXPECT_EQ(c[0].at("temperature"), 0);
}

TEST(Remote, ProbabilityMapping) {
  using nlohmann::json;
  auto top = [](json entries) {
    return json{{"text", " no"}, {"logprobs", {{"top_logprobs", json::array({entries})}}}};
  };
  EXPECT_NEAR(completion_probability(top({{" yes", std::log(0.3)}})), 0.3, 1e-12);
  EXPECT_NEAR(completion_probability(top({{" no", std::log(0.8)}})), 0.2, 1e-12);
  EXPECT_EQ(completion_probability(json{{"text", " yes"}}), 1.0);
  EXPECT_EQ(completion_probability(json{{"text", " maybe"}}), 0.0);
  EXPECT_EQ(completion_probability(top({{" yes", 5.0}})), 1.0);
  EXPECT_EQ(completion_probability(top({{" yes", -1000.0}, {" no", -1000.0}})), 0.5);
}

TEST(Remote, BackendFitAndPredict) {
  MockService svc;
  RemoteCompletionBackend backend(options_for(svc));
  std::vector<LabeledExample> ex(2);
  ex[0].example.target_text = "a";
  ex[0].positive = true;
  ex[1].example.target_text = "b";
  auto state = backend.fit(ex, {});
  EXPECT_EQ(state->to_json().at("model_id"), "curie:ft-mock-ft-1");
  auto loaded = backend.load_state(state->to_json());
  AnnotationExample q;
  q.target_text = "a";
  const double p = backend.predict_probability(*loaded, q);
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
  EXPECT_THROW(backend.load_state(nlohmann::json::object()), BackendError);
}

TEST(Remote, EnvironmentDefaults) {
  ::setenv(kApiKeyEnv, "env-key", 1);
  ::setenv(kApiBaseEnv, "http://example.invalid", 1);
  auto o = RemoteClientOptions::from_environment();
  EXPECT_EQ(o.api_key, "env-key");
  EXPECT_EQ(o.base_url, "http://example.invalid");
  BackendOptions b;
  b.api_key = "explicit";
  EXPECT_EQ(RemoteClientOptions::from_environment(b).api_key, "explicit");
  ::unsetenv(kApiKeyEnv);
  ::unsetenv(kApiBaseEnv);
}
