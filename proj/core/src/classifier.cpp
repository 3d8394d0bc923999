#include "talkmoves/classifier.hpp"

#include <sstream>

#include "json_util.hpp"
#include "talkmoves/errors.hpp"
#include "talkmoves/hashing.hpp"
#include "talkmoves/linear_backend.hpp"
#include "talkmoves/remote_backend.hpp"

namespace talkmoves {

std::string_view backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::local_encoder: return "local_encoder";
    case BackendKind::remote_completion_service: return "remote_completion_service";
    case BackendKind::linear_baseline: return "linear_baseline";
  }
  return "unknown";
}

BackendKind parse_backend(std::string_view name) {
  for (auto k : {BackendKind::local_encoder, BackendKind::remote_completion_service,
                 BackendKind::linear_baseline}) {
    if (backend_name(k) == name) return k;
  }
  throw ValidationError("unknown backend '" + std::string(name) + "'");
}

void TrainingConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (passes < 1) throw ValidationError("passes must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw ValidationError("decision_threshold must be in (0, 1)");
  }
  if (!(l2 >= 0.0)) throw ValidationError("l2 must be non-negative");
}

MoveConfig best_config_for(Move move) {
  MoveConfig c;
  switch (move) {
    case Move::adding_on:
      c.preprocess.context_size = 2;
      c.preprocess.truncation_side = TruncationSide::keep_start;
      c.training.epochs = 4;
      break;
    case Move::connecting:
      c.preprocess.context_size = 0;
      c.preprocess.balancing_factor = 6;
      c.training.epochs = 3;
      break;
    case Move::eliciting:
      c.preprocess.context_size = 0;
      c.training.epochs = 5;
      c.training.base_model = "davinci";
      break;
    case Move::probing:
      c.preprocess.context_size = 2;
      c.preprocess.truncation_side = TruncationSide::keep_end;
      c.training.epochs = 4;
      break;
    case Move::revoicing:
      c.preprocess.context_size = 2;
      c.preprocess.truncation_side = TruncationSide::keep_end;
      c.preprocess.balancing_factor = 1;
      c.training.epochs = 5;
      break;
    case Move::model_utterance:
      c.preprocess.context_size = 2;
      c.preprocess.truncation_side = TruncationSide::keep_end;
      c.preprocess.balancing_factor = 1;
      c.training.epochs = 5;
      break;
  }
  return c;
}

MoveConfig best_config_for(std::string_view name) { return best_config_for(parse_move(name)); }

EvalReport report_from_counts(Move move, std::size_t tp, std::size_t fp, std::size_t fn,
                              std::size_t tn) {
  EvalReport r;
  r.move = move;
  r.true_positive = tp;
  r.false_positive = fp;
  r.false_negative = fn;
  r.true_negative = tn;
  if (tp + fp > 0) {
    r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    r.precision_undefined = true;
  }
  if (tp + fn > 0) {
    r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    r.recall_undefined = true;
  }
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.f1_undefined = true;
  }
  return r;
}

std::shared_ptr<const ClassifierBackend> make_backend(BackendKind kind,
                                                      const BackendOptions& options) {
  switch (kind) {
    case BackendKind::linear_baseline:
      return std::make_shared<LinearBaselineBackend>();
    case BackendKind::remote_completion_service:
      return std::make_shared<RemoteCompletionBackend>(RemoteClientOptions::from_environment(options));
    case BackendKind::local_encoder:
      break;
  }
  throw BackendError(
      "backend 'local_encoder' is not built into this binary; use linear_baseline or "
      "remote_completion_service");
}

std::vector<LabeledExample> binarize(const std::vector<AnnotationExample>& prepared, Move move) {
  std::vector<LabeledExample> out;
  out.reserve(prepared.size());
  for (const auto& ex : prepared) {
    if (!ex.gold) throw ValidationError("example '" + ex.example_id + "' has no gold labels");
    LabeledExample le;
    le.positive = ex.gold->get(move);
    le.example = ex;
    // Backends only ever see the target move's label.
    le.example.gold.reset();
    le.example.labels_by_annotator.clear();
    out.push_back(std::move(le));
  }
  return out;
}

ModelHandle train_move_model(Move move, const std::vector<AnnotationExample>& train_examples,
                             const PreprocessConfig& preprocess, const TrainingConfig& training,
                             const ClassifierBackend& backend, const Tokenizer& tokenizer,
                             TrainingTrace* trace) {
  preprocess.validate();
  training.validate();

  // Keep only this move's gold bit so nothing downstream can read others.
  std::vector<AnnotationExample> prepared;
  prepared.reserve(train_examples.size());
  for (const auto& ex : train_examples) {
    if (!ex.gold) throw ValidationError("example '" + ex.example_id + "' has no gold labels");
    AnnotationExample p = prepare_example(ex, preprocess, tokenizer);
    LabelSet only;
    only.set(move, ex.gold->get(move));
    p.gold = only;
    p.labels_by_annotator.clear();
    prepared.push_back(std::move(p));
  }
  std::size_t positives = 0;
  for (const auto& p : prepared) positives += p.gold->get(move) ? 1 : 0;
  if (positives == 0) {
    throw NoPositivesError("no positive training examples for " + std::string(move_name(move)));
  }
  if (positives == prepared.size()) {
    throw NoPositivesError("no negative training examples for " + std::string(move_name(move)));
  }
  if (preprocess.balancing_factor) {
    prepared = balance_labels(prepared, move, *preprocess.balancing_factor,
                              derive_seed(training.seed, "balance:" + std::string(move_name(move))));
  }
  auto labeled = binarize(prepared, move);
  if (trace) {
    trace->positives = 0;
    for (const auto& l : labeled) trace->positives += l.positive ? 1 : 0;
    trace->negatives = labeled.size() - trace->positives;
  }

  ModelHandle handle;
  handle.move = move;
  handle.preprocess = preprocess;
  handle.training = training;
  handle.training.backend = backend.kind();
  handle.tokenizer = tokenizer.name();
  handle.state = backend.fit(labeled, handle.training);
  if (!handle.state) throw BackendError("backend returned no model state");
  return handle;
}

double predict_probability(const ModelHandle& model, const ClassifierBackend& backend,
                           const AnnotationExample& prepared) {
  if (!model.state) throw BackendError("model has no trained state");
  double p = backend.predict_probability(*model.state, prepared);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw BackendError("backend produced probability outside [0, 1]");
  }
  return p;
}

EvalReport evaluate(const ModelHandle& model, const ClassifierBackend& backend,
                    const std::vector<AnnotationExample>& test_examples, double threshold,
                    const Tokenizer& tokenizer) {
  if (test_examples.empty()) throw EmptyTestSetError("no test examples");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw DomainError("threshold must be in [0, 1]");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& ex : test_examples) {
    if (!ex.gold) throw ValidationError("example '" + ex.example_id + "' has no gold labels");
    const bool truth = ex.gold->get(model.move);
    AnnotationExample prepared = prepare_example(ex, model.preprocess, tokenizer);
    prepared.gold.reset();
    prepared.labels_by_annotator.clear();
    const bool decision = predict_probability(model, backend, prepared) >= threshold;
    if (decision && truth) ++tp;
    else if (decision) ++fp;
    else if (truth) ++fn;
    else ++tn;
  }
  return report_from_counts(model.move, tp, fp, fn, tn);
}

EpochSweepResult epoch_sweep(Move move, const std::vector<AnnotationExample>& train_examples,
                             const std::vector<AnnotationExample>& test_examples,
                             const MoveConfig& config, const ClassifierBackend& backend,
                             const Tokenizer& tokenizer, int max_epochs) {
  if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  EpochSweepResult result;
  bool have_best = false;
  for (int epochs = max_epochs; epochs >= 1; --epochs) {
    TrainingConfig training = config.training;
    training.epochs = epochs;
    ModelHandle model =
        train_move_model(move, train_examples, config.preprocess, training, backend, tokenizer);
    EvalReport report =
        evaluate(model, backend, test_examples, training.decision_threshold, tokenizer);
    result.history.emplace_back(epochs, report);
    if (!have_best || report.f1 > result.best.f1) {
      result.best = report;
      result.best_epochs = epochs;
      have_best = true;
    }
  }
  return result;
}

std::string remote_prompt(const AnnotationExample& prepared) {
  std::string prompt;
  if (prepared.prior_text) {
    prompt.append(kPromptContextTag).append(*prepared.prior_text).append(kPromptSeparator);
  }
  prompt.append(kPromptUtteranceTag).append(prepared.target_text).append(kPromptSuffix);
  return prompt;
}

PromptCompletion remote_finetune_format(const AnnotationExample& prepared, bool gold) {
  return {remote_prompt(prepared),
          std::string(gold ? kPositiveCompletion : kNegativeCompletion)};
}

ParsedPrompt parse_remote_prompt(std::string_view prompt) {
  if (prompt.size() < kPromptSuffix.size() ||
      prompt.substr(prompt.size() - kPromptSuffix.size()) != kPromptSuffix) {
    throw ValidationError("prompt does not end with the completion delimiter");
  }
  std::string_view body = prompt.substr(0, prompt.size() - kPromptSuffix.size());
  ParsedPrompt parsed;
  if (body.substr(0, kPromptContextTag.size()) == kPromptContextTag) {
    const std::string marker = std::string(kPromptSeparator) + std::string(kPromptUtteranceTag);
    auto pos = body.find(marker);
    if (pos == std::string_view::npos) throw ValidationError("prompt has context but no utterance");
    parsed.prior_text = std::string(body.substr(kPromptContextTag.size(), pos - kPromptContextTag.size()));
    body = body.substr(pos + marker.size());
  } else if (body.substr(0, kPromptUtteranceTag.size()) == kPromptUtteranceTag) {
    body = body.substr(kPromptUtteranceTag.size());
  } else {
    throw ValidationError("prompt does not start with a context or utterance tag");
  }
  parsed.target_text = std::string(body);
  return parsed;
}

std::string format_finetune_jsonl(std::span<const PromptCompletion> records) {
  std::string out;
  for (const auto& r : records) {
    detail::ordered_json j;
    j["prompt"] = r.prompt;
    j["completion"] = r.completion;
    out += detail::dump_line(j);
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const PreprocessConfig& c) {
  return {{"context_size", c.context_size},
          {"truncation_side", truncation_name(c.truncation_side)},
          {"balancing_factor",
           c.balancing_factor ? nlohmann::json(*c.balancing_factor) : nlohmann::json(nullptr)},
          {"total_token_limit", c.total_token_limit},
          {"segment_token_limit", c.segment_token_limit}};
}

PreprocessConfig preprocess_from_json(const nlohmann::json& j, const PreprocessConfig& defaults) {
  PreprocessConfig c = defaults;
  try {
    if (j.contains("context_size")) c.context_size = j.at("context_size").get<int>();
    if (j.contains("truncation_side")) {
      c.truncation_side = parse_truncation(j.at("truncation_side").get<std::string>());
    }
    if (j.contains("balancing_factor")) {
      const auto& b = j.at("balancing_factor");
      if (b.is_null()) {
        c.balancing_factor.reset();
      } else {
        c.balancing_factor = b.get<int>();
      }
    }
    if (j.contains("total_token_limit")) c.total_token_limit = j.at("total_token_limit").get<int>();
    if (j.contains("segment_token_limit")) {
      c.segment_token_limit = j.at("segment_token_limit").get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("preprocess config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const TrainingConfig& c) {
  return {{"backend", backend_name(c.backend)},
          {"epochs", c.epochs},
          {"passes", c.passes},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed},
          {"decision_threshold", c.decision_threshold},
          {"l2", c.l2},
          {"base_model", c.base_model}};
}

TrainingConfig training_from_json(const nlohmann::json& j, const TrainingConfig& defaults) {
  TrainingConfig c = defaults;
  try {
    if (j.contains("backend")) c.backend = parse_backend(j.at("backend").get<std::string>());
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("passes")) c.passes = j.at("passes").get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("decision_threshold")) {
      c.decision_threshold = j.at("decision_threshold").get<double>();
    }
    if (j.contains("l2")) c.l2 = j.at("l2").get<double>();
    if (j.contains("base_model")) c.base_model = j.at("base_model").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"move", move_name(r.move)},
          {"true_positive", r.true_positive},
          {"false_positive", r.false_positive},
          {"false_negative", r.false_negative},
          {"true_negative", r.true_negative},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"precision_undefined", r.precision_undefined},
          {"recall_undefined", r.recall_undefined},
          {"f1_undefined", r.f1_undefined}};
}

}  // namespace talkmoves
