#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "talkmoves/classifier.hpp"
#include "talkmoves/corpus.hpp"

namespace talkmoves {

struct PredictionRecord {
  std::string session_id;
  std::string utterance_id;
  int segment_index = 0;
  Move move = Move::adding_on;
  double probability = 0.0;
  bool decision = false;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct SessionFeatures {
  std::string session_id;
  double duration_hours = 0.0;
  std::map<Move, std::size_t> counts;
  std::map<Move, double> rate_per_hour;
};

// One trained model per move, with the backend that can run it.
struct SuiteEntry {
  ModelHandle model;
  std::shared_ptr<const ClassifierBackend> backend;
};
using ModelSuite = std::map<Move, SuiteEntry>;

// Records for one session: instructor utterances in order, then moves in
// suite order, then segments. Each move replays its own stored profile.
std::vector<PredictionRecord> predict_session(const ModelSuite& suite, const Session& session,
                                              const Tokenizer& tokenizer);

struct InferenceOptions {
  std::size_t jobs = 1;
  bool resume = true;
  // Checked between sessions; a set flag stops the run after the sessions
  // already in flight finish.
  const std::atomic<bool>* cancel = nullptr;
  // Invoked (serialized) after each session completes or fails.
  std::function<void(const std::string& session_id, bool ok)> on_session_done;
};

struct InferenceSummary {
  std::size_t completed = 0;
  std::size_t skipped = 0;  // already complete in the checkpoint
  std::size_t failed = 0;
  bool cancelled = false;
  std::vector<std::string> failed_sessions;
};

inline constexpr std::string_view kCheckpointSchema = "talkmoves.checkpoint/1";

// Runs the suite over the corpus with per-session checkpoints under
// `checkpoint_dir`:
//   manifest.json    schema, suite hash, per-session status + hashes
//   sessions/<id>.jsonl
// Completed sessions whose input hash matches are skipped; a part file that
// no longer matches its recorded hash raises CorruptCheckpointError. A
// BackendError fails only that session. Sessions are merged in corpus order
// into `output_path` only when every session is complete.
InferenceSummary predict_corpus(const ModelSuite& suite, const std::vector<Session>& corpus,
                                const std::filesystem::path& checkpoint_dir,
                                const std::filesystem::path& output_path,
                                const Tokenizer& tokenizer, const InferenceOptions& options = {});

// Hash of every model's config and state; part of each session's input hash.
std::string suite_fingerprint(const ModelSuite& suite);

enum class CountingMode { utterance, segment };

// Utterance mode counts a source utterance once when any of its segments is
// positive; segment mode counts positive segments. Throws ZeroDurationError.
SessionFeatures aggregate_session(const std::vector<PredictionRecord>& records,
                                  const Session& session, std::span<const Move> moves,
                                  CountingMode mode = CountingMode::utterance);
SessionFeatures aggregate_session(const std::vector<PredictionRecord>& records,
                                  const std::string& session_id, double duration_hours,
                                  std::span<const Move> moves,
                                  CountingMode mode = CountingMode::utterance);

// session_id,duration_hours,count_<move>...,rate_<move>...
void export_features(const std::vector<SessionFeatures>& features, std::span<const Move> moves,
                     const std::filesystem::path& path);
void write_features(const std::vector<SessionFeatures>& features, std::span<const Move> moves,
                    std::ostream& out);
std::vector<SessionFeatures> import_features(const std::filesystem::path& path);

std::string prediction_to_json_line(const PredictionRecord& record);
std::vector<PredictionRecord> parse_predictions(std::istream& in, const std::string& source_name);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

}  // namespace talkmoves
