#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "talkmoves/annotation.hpp"
#include "talkmoves/corpus.hpp"
#include "talkmoves/csv.hpp"
#include "talkmoves/inference.hpp"
#include "talkmoves/labels.hpp"

namespace talkmoves::synthetic {

// Rule-generated transcripts: instructor turns are filler sentences, and a
// turn exhibits a move exactly when it contains that move's marker phrase.
// Filler never uses a marker word, so the rule is the ground truth.
std::string_view marker_phrase(Move move);

// Gold labels of a text under the marker rule.
LabelSet rule_labels(std::string_view text);

struct CorpusOptions {
  std::size_t sessions = 20;
  std::size_t instructors = 10;
  std::size_t instructor_turns = 20;  // per session
  double long_turn_rate = 0.05;       // turns longer than 200 tokens
  double chat_rate = 0.15;            // student turns delivered via chat
  // Per-move probability that an instructor turn carries the marker.
  double adding_on_rate = 0.25;
  double connecting_rate = 0.08;
  double eliciting_rate = 0.17;
  double probing_rate = 0.13;
  double revoicing_rate = 0.11;
  double model_utterance_rate = 0.10;
  std::uint64_t seed = 7;
};

struct Corpus {
  std::vector<Session> sessions;
  // Two annotators per example; their union equals rule_labels.
  std::vector<AnnotationRecord> annotations;
  // Outcomes / covariates table consumed by run_table.
  CsvTable outcomes;
};

Corpus make_corpus(const CorpusOptions& options);

// Writes the raw ingest layout: <id>.session.jsonl (header + diarized audio
// turns) for even sessions, <id>.segments.jsonl + <id>.speakers.jsonl for odd
// ones, <id>.chat.jsonl where chat exists; plus annotations.csv,
// outcomes.csv and pipeline.json.
void write_raw_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                      std::uint64_t seed);

struct RegressionDataOptions {
  std::size_t instructors = 20;
  std::size_t sessions_per_instructor = 10;
  double rate_coefficient = 0.05;
  double cluster_noise_sd = 0.6;
  double idiosyncratic_noise_sd = 0.4;
  std::uint64_t seed = 0;
};

struct RegressionData {
  std::vector<SessionFeatures> features;
  CsvTable outcomes;
};

// Transcript-level attendance = 0.05 * rate(connecting) + covariate effects
// + instructor-level noise + row noise.
RegressionData make_regression_data(const RegressionDataOptions& options);

}  // namespace talkmoves::synthetic
