#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "talkmoves/classifier.hpp"
#include "talkmoves/labels.hpp"

namespace talkmoves {

inline constexpr std::string_view kPipelineVersion = "0.1.0";
inline constexpr std::string_view kManifestSchema = "talkmoves.manifest/1";

// Run configuration. Layering: config file < environment < command line.
struct PipelineConfig {
  std::filesystem::path corpus_dir;
  std::filesystem::path output_dir;
  std::optional<std::uint64_t> seed;
  std::string tokenizer = "whitespace";
  std::size_t sample_size = 2000;
  double train_ratio = 0.8;
  std::filesystem::path annotations_path;
  std::filesystem::path outcomes_path;
  std::filesystem::path wer_path;  // optional reference,hypothesis CSV
  // Per-move preprocess / training patches over the registry defaults.
  std::map<Move, nlohmann::json> overrides;
  std::map<Move, double> thresholds;
  bool exclude_poor_transcription = false;
  bool segment_level_counting = false;
  bool enable_model_utterance = false;
  std::size_t jobs = 1;
  std::optional<BackendKind> backend;
  bool resume = false;
  double remote_poll_interval_seconds = 5.0;
  double remote_poll_deadline_seconds = 4 * 3600.0;

  // Relative paths resolve against the config file's directory.
  static PipelineConfig from_json(const nlohmann::json& json,
                                  const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
  // TALKMOVES_SEED, TALKMOVES_JOBS, TALKMOVES_BACKEND, TALKMOVES_OUTPUT_DIR.
  void apply_environment();
  // Throws ValidationError.
  void validate() const;

  std::uint64_t run_seed() const;
  std::vector<Move> moves() const;
  MoveConfig move_config(Move move) const;
  BackendOptions backend_options() const;

  nlohmann::json snapshot() const;
};

// Output layout under output_dir.
struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path sessions() const { return root / "sessions"; }
  std::filesystem::path dataset() const { return root / "dataset"; }
  std::filesystem::path examples() const { return dataset() / "examples.jsonl"; }
  std::filesystem::path labeled() const { return dataset() / "labeled.jsonl"; }
  std::filesystem::path train() const { return dataset() / "train.jsonl"; }
  std::filesystem::path test() const { return dataset() / "test.jsonl"; }
  std::filesystem::path stats() const { return root / "stats" / "annotation_stats.json"; }
  std::filesystem::path models() const { return root / "models"; }
  std::filesystem::path model(Move move) const;
  std::filesystem::path eval_csv() const { return root / "eval" / "eval.csv"; }
  std::filesystem::path eval_json() const { return root / "eval" / "eval.json"; }
  std::filesystem::path checkpoint() const { return root / "inference" / "checkpoint"; }
  std::filesystem::path predictions() const { return root / "inference" / "predictions.jsonl"; }
  std::filesystem::path features() const { return root / "features" / "features.csv"; }
  std::filesystem::path regression_csv() const { return root / "regression" / "table.csv"; }
  std::filesystem::path regression_txt() const { return root / "regression" / "table.txt"; }
  std::filesystem::path report() const { return root / "report.txt"; }
  std::filesystem::path manifest(std::string_view subcommand) const;
};

struct StepResult {
  std::string summary;
  // Runtime failures that did not abort the step (failed sessions, cells).
  std::size_t soft_failures = 0;
};

StepResult run_ingest(const PipelineConfig& config);
StepResult run_build_dataset(const PipelineConfig& config);
StepResult run_annotate_stats(const PipelineConfig& config);
StepResult run_train(const PipelineConfig& config, std::optional<Move> only = std::nullopt);
StepResult run_evaluate(const PipelineConfig& config, std::optional<Move> only = std::nullopt);
// Called after each session finishes, with the session id and success.
using SessionProgress = std::function<void(const std::string&, bool)>;
StepResult run_infer(const PipelineConfig& config, const std::atomic<bool>* cancel = nullptr,
                     const SessionProgress& progress = {});
StepResult run_features(const PipelineConfig& config);
StepResult run_regress(const PipelineConfig& config);
StepResult run_report(const PipelineConfig& config);

// Config snapshot, input hashes and versions for one subcommand.
void write_manifest(const PipelineConfig& config, std::string_view subcommand,
                    const std::vector<std::filesystem::path>& inputs);

// Writes via a temporary file and rename.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

}  // namespace talkmoves
