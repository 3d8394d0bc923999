// Command-line driver: one subcommand per pipeline step.

#include <atomic>
#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "talkmoves/errors.hpp"
#include "talkmoves/labels.hpp"
#include "talkmoves/pipeline.hpp"

namespace {

std::atomic<bool> g_cancel{false};

extern "C" void on_interrupt(int) { g_cancel.store(true); }

constexpr const char* kSynopsis =
    "usage: talkmoves <subcommand> [--config PATH] [--seed INT] [--jobs N]\n"
    "                 [--backend NAME] [--exclude-poor-transcription] [--resume]\n"
    "                 [--move NAME]   (train, evaluate)\n"
    "subcommands: ingest build-dataset annotate-stats train evaluate infer\n"
    "             features regress report\n";

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2 };

struct Flags {
  std::string config = "pipeline.json";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> backend;
  std::optional<std::string> move;
  bool exclude_poor_transcription = false;
  bool resume = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "pipeline configuration file")->capture_default_str();
  sub->add_option("--seed", f.seed, "run seed");
  sub->add_option("--jobs", f.jobs, "worker cap")->check(CLI::PositiveNumber);
  sub->add_option("--backend", f.backend,
                  "linear_baseline | remote_completion_service | local_encoder");
  sub->add_flag("--exclude-poor-transcription", f.exclude_poor_transcription,
                "drop examples flagged as poor transcription");
  sub->add_flag("--resume", f.resume, "resume inference from its checkpoint");
}

talkmoves::PipelineConfig resolve_config(const Flags& f) {
  using namespace talkmoves;
  PipelineConfig cfg = PipelineConfig::load(f.config);
  cfg.apply_environment();
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.backend) cfg.backend = parse_backend(*f.backend);
  if (f.exclude_poor_transcription) cfg.exclude_poor_transcription = true;
  if (f.resume) cfg.resume = true;
  cfg.validate();
  return cfg;
}

bool is_usage_error(const talkmoves::Error& e) {
  return e.kind() == "ValidationError" || e.kind() == "UnknownMoveError";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace talkmoves;
  CLI::App app{"Talk-move classification and outcome-analysis pipeline", "talkmoves"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kPipelineVersion));

  Flags flags;
  const char* names[] = {"ingest",   "build-dataset", "annotate-stats", "train",  "evaluate",
                         "infer",    "features",      "regress",        "report"};
  const char* help[] = {"normalize raw transcripts into sessions",
                        "sample, segment, label and split examples",
                        "annotator agreement, label distribution, WER",
                        "fit one classifier per move",
                        "precision / recall / F1 on the test split",
                        "checkpointed predictions over every session",
                        "per-session talk-move counts and hourly rates",
                        "outcome regressions with clustered standard errors",
                        "plain-text summary of every stage"};
  for (std::size_t i = 0; i < std::size(names); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    add_common(sub, flags);
    if (std::string(names[i]) == "train" || std::string(names[i]) == "evaluate") {
      sub->add_option("--move", flags.move, "restrict to one move");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << kSynopsis;
    return kUsage;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const PipelineConfig cfg = resolve_config(flags);
    std::optional<Move> only;
    if (flags.move) only = parse_move(*flags.move);

    StepResult r;
    if (cmd == "ingest") {
      r = run_ingest(cfg);
    } else if (cmd == "build-dataset") {
      r = run_build_dataset(cfg);
    } else if (cmd == "annotate-stats") {
      r = run_annotate_stats(cfg);
    } else if (cmd == "train") {
      r = run_train(cfg, only);
    } else if (cmd == "evaluate") {
      r = run_evaluate(cfg, only);
    } else if (cmd == "infer") {
      std::signal(SIGINT, on_interrupt);
      std::signal(SIGTERM, on_interrupt);
      r = run_infer(cfg, &g_cancel);
    } else if (cmd == "features") {
      r = run_features(cfg);
    } else if (cmd == "regress") {
      r = run_regress(cfg);
    } else {
      r = run_report(cfg);
    }
    std::cout << r.summary << "\n";
    if (r.soft_failures > 0) {
      std::cerr << "warning: " << r.soft_failures << " item(s) failed; see outputs for details\n";
    }
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
    if (is_usage_error(e)) {
      std::cerr << kSynopsis;
      return kUsage;
    }
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
