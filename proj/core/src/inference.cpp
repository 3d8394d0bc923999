#include "talkmoves/inference.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "fs_util.hpp"
#include "json_util.hpp"
#include "talkmoves/csv.hpp"
#include "talkmoves/errors.hpp"
#include "talkmoves/hashing.hpp"

namespace talkmoves {

using detail::ordered_json;
using nlohmann::json;

std::vector<PredictionRecord> predict_session(const ModelSuite& suite, const Session& session,
                                              const Tokenizer& tokenizer) {
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i < session.utterances.size(); ++i) {
    const Utterance& utt = session.utterances[i];
    if (utt.speaker_role != SpeakerRole::instructor) continue;
    for (const auto& [move, entry] : suite) {
      const PreprocessConfig& cfg = entry.model.preprocess;
      const auto segments = segment_long_utterance(utt, cfg.segment_token_limit, tokenizer);
      const auto prior = build_context(session, i, cfg);
      for (const auto& seg : segments) {
        AnnotationExample ex = assemble_example(seg, prior, cfg, tokenizer);
        ex.session_id = session.session_id;
        ex.utterance_id = utt.utterance_id;
        ex.example_id = utt.utterance_id + "#" + std::to_string(seg.index);
        PredictionRecord r;
        r.session_id = session.session_id;
        r.utterance_id = utt.utterance_id;
        r.segment_index = seg.index;
        r.move = move;
        r.probability = predict_probability(entry.model, *entry.backend, ex);
        r.decision = r.probability >= entry.model.threshold();
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

std::string suite_fingerprint(const ModelSuite& suite) {
  std::string blob;
  for (const auto& [move, entry] : suite) {
    const ModelHandle& m = entry.model;
    json j = {{"move", move_name(move)},
              {"tokenizer", m.tokenizer},
              {"preprocess", to_json(m.preprocess)},
              {"training", to_json(m.training)},
              {"state", m.state ? m.state->to_json() : json(nullptr)}};
    blob += j.dump();
    blob += '\n';
  }
  return sha256_hex(blob);
}

std::string prediction_to_json_line(const PredictionRecord& r) {
  ordered_json j;
  j["session_id"] = r.session_id;
  j["utterance_id"] = r.utterance_id;
  j["segment_index"] = r.segment_index;
  j["move"] = move_name(r.move);
  j["probability"] = r.probability;
  j["decision"] = r.decision;
  return detail::dump_line(j);
}

std::vector<PredictionRecord> parse_predictions(std::istream& in, const std::string& source_name) {
  std::vector<PredictionRecord> out;
  detail::for_each_json_line(in, source_name, [&](const json& j, std::size_t) {
    PredictionRecord r;
    r.session_id = detail::require(j, "session_id").get<std::string>();
    r.utterance_id = detail::require(j, "utterance_id").get<std::string>();
    r.segment_index = detail::require(j, "segment_index").get<int>();
    r.move = parse_move(detail::require(j, "move").get<std::string>());
    r.probability = detail::require(j, "probability").get<double>();
    r.decision = detail::require(j, "decision").get<bool>();
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  auto in = detail::open_input(path.string());
  return parse_predictions(in, path.string());
}

namespace {

std::string session_part_name(const std::string& session_id) {
  // Session ids are used as file names; keep them filesystem-safe.
  std::string name;
  for (char c : session_id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '-' || c == '_' || c == '.';
    name.push_back(ok ? c : '_');
  }
  return name + "-" + sha256_hex(session_id).substr(0, 8) + ".jsonl";
}

class CheckpointManifest {
 public:
  CheckpointManifest(std::filesystem::path path, std::string suite)
      : path_(std::move(path)), suite_(std::move(suite)) {}

  void load() {
    if (!std::filesystem::exists(path_)) return;
    json j;
    try {
      j = json::parse(detail::read_file(path_));
    } catch (const json::exception& e) {
      throw CorruptCheckpointError(path_.string() + ": unreadable manifest: " + e.what());
    }
    if (j.value("schema", std::string()) != kCheckpointSchema) {
      throw CorruptCheckpointError(path_.string() + ": unsupported checkpoint schema");
    }
    if (j.value("suite", std::string()) != suite_) return;  // different models: start over
    if (j.contains("sessions")) sessions_ = j.at("sessions");
  }

  const json* entry(const std::string& session_id) const {
    if (!sessions_.contains(session_id)) return nullptr;
    return &sessions_.at(session_id);
  }

  void set(const std::string& session_id, json value) {
    std::lock_guard lock(mutex_);
    sessions_[session_id] = std::move(value);
    persist_locked();
  }

  void persist() {
    std::lock_guard lock(mutex_);
    persist_locked();
  }

 private:
  void persist_locked() {
    json j = {{"schema", kCheckpointSchema}, {"suite", suite_}, {"sessions", sessions_}};
    detail::atomic_write_file(path_, j.dump(1) + "\n");
  }

  std::filesystem::path path_;
  std::string suite_;
  json sessions_ = json::object();
  std::mutex mutex_;
};

}  // namespace

InferenceSummary predict_corpus(const ModelSuite& suite, const std::vector<Session>& corpus,
                                const std::filesystem::path& checkpoint_dir,
                                const std::filesystem::path& output_path,
                                const Tokenizer& tokenizer, const InferenceOptions& options) {
  if (suite.empty()) throw ValidationError("model suite is empty");
  for (const auto& [move, entry] : suite) {
    if (!entry.backend || !entry.model.state) {
      throw ValidationError("no trained model for " + std::string(move_name(move)));
    }
    if (entry.model.tokenizer != tokenizer.name()) {
      throw ValidationError("model for " + std::string(move_name(move)) + " expects tokenizer '" +
                            entry.model.tokenizer + "'");
    }
  }
  {
    std::set<std::string> ids;
    for (const auto& s : corpus) {
      if (!ids.insert(s.session_id).second) {
        throw ValidationError("duplicate session id '" + s.session_id + "' in corpus");
      }
    }
  }

  const auto parts_dir = checkpoint_dir / "sessions";
  std::filesystem::create_directories(parts_dir);
  const std::string fingerprint = suite_fingerprint(suite);
  CheckpointManifest manifest(checkpoint_dir / "manifest.json", fingerprint);
  if (options.resume) manifest.load();

  std::vector<std::string> input_hashes(corpus.size());
  std::vector<std::size_t> work;
  InferenceSummary summary;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::ostringstream serialized;
    write_session(corpus[i], serialized);
    input_hashes[i] = sha256_hex(fingerprint + "\n" + serialized.str());
    const json* e = manifest.entry(corpus[i].session_id);
    if (e && e->value("status", std::string()) == "complete" &&
        e->value("input_hash", std::string()) == input_hashes[i]) {
      const auto part = parts_dir / session_part_name(corpus[i].session_id);
      if (!std::filesystem::exists(part)) {
        throw CorruptCheckpointError("checkpoint part for session '" + corpus[i].session_id +
                                     "' is missing");
      }
      if (sha256_file(part) != e->value("output_hash", std::string())) {
        throw CorruptCheckpointError("checkpoint part for session '" + corpus[i].session_id +
                                     "' does not match its manifest hash");
      }
      ++summary.skipped;
      continue;
    }
    work.push_back(i);
  }
  manifest.persist();

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex result_mutex;
  std::exception_ptr first_error;
  std::vector<std::string> failed;
  std::size_t completed = 0;

  auto worker = [&]() {
    while (!stop.load()) {
      if (options.cancel && options.cancel->load()) {
        stop = true;
        break;
      }
      const std::size_t k = next.fetch_add(1);
      if (k >= work.size()) break;
      const Session& session = corpus[work[k]];
      bool ok = true;
      try {
        std::string contents;
        for (const auto& r : predict_session(suite, session, tokenizer)) {
          contents += prediction_to_json_line(r);
          contents += '\n';
        }
        const auto part = parts_dir / session_part_name(session.session_id);
        detail::atomic_write_file(part, contents);
        manifest.set(session.session_id, json{{"status", "complete"},
                                              {"input_hash", input_hashes[work[k]]},
                                              {"output_hash", sha256_hex(contents)}});
      } catch (const BackendError& e) {
        ok = false;
        manifest.set(session.session_id, json{{"status", "failed"},
                                              {"input_hash", input_hashes[work[k]]},
                                              {"error", e.what()}});
      } catch (...) {
        std::lock_guard lock(result_mutex);
        if (!first_error) first_error = std::current_exception();
        stop = true;
        return;
      }
      std::lock_guard lock(result_mutex);
      if (ok) {
        ++completed;
      } else {
        failed.push_back(session.session_id);
      }
      if (options.on_session_done) options.on_session_done(session.session_id, ok);
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, work.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  summary.completed = completed;
  summary.failed = failed.size();
  std::sort(failed.begin(), failed.end());
  summary.failed_sessions = std::move(failed);
  summary.cancelled = summary.completed + summary.failed < work.size();

  if (!summary.cancelled && summary.failed == 0) {
    std::string merged;
    for (const auto& s : corpus) merged += detail::read_file(parts_dir / session_part_name(s.session_id));
    detail::atomic_write_file(output_path, merged);
  }
  return summary;
}

SessionFeatures aggregate_session(const std::vector<PredictionRecord>& records,
                                  const std::string& session_id, double duration_hours,
                                  std::span<const Move> moves, CountingMode mode) {
  if (!(duration_hours > 0.0)) {
    throw ZeroDurationError("session '" + session_id + "' has non-positive duration");
  }
  SessionFeatures f;
  f.session_id = session_id;
  f.duration_hours = duration_hours;
  std::map<Move, std::set<std::string>> positive_utterances;
  for (Move m : moves) f.counts[m] = 0;
  for (const auto& r : records) {
    if (r.session_id != session_id || !r.decision) continue;
    auto it = f.counts.find(r.move);
    if (it == f.counts.end()) continue;
    if (mode == CountingMode::segment) {
      ++it->second;
    } else {
      positive_utterances[r.move].insert(r.utterance_id);
    }
  }
  if (mode == CountingMode::utterance) {
    for (auto& [m, n] : f.counts) n = positive_utterances[m].size();
  }
  for (const auto& [m, n] : f.counts) f.rate_per_hour[m] = static_cast<double>(n) / duration_hours;
  return f;
}

SessionFeatures aggregate_session(const std::vector<PredictionRecord>& records,
                                  const Session& session, std::span<const Move> moves,
                                  CountingMode mode) {
  return aggregate_session(records, session.session_id, session_duration_hours(session), moves,
                           mode);
}

void write_features(const std::vector<SessionFeatures>& features, std::span<const Move> moves,
                    std::ostream& out) {
  std::vector<std::string> header = {"session_id", "duration_hours"};
  for (Move m : moves) header.push_back("count_" + std::string(move_name(m)));
  for (Move m : moves) header.push_back("rate_" + std::string(move_name(m)));
  CsvTable table(header);
  for (const auto& f : features) {
    std::vector<std::string> row = {f.session_id, format_double(f.duration_hours)};
    for (Move m : moves) {
      auto it = f.counts.find(m);
      row.push_back(std::to_string(it == f.counts.end() ? 0 : it->second));
    }
    for (Move m : moves) {
      auto it = f.rate_per_hour.find(m);
      row.push_back(format_double(it == f.rate_per_hour.end() ? 0.0 : it->second));
    }
    table.add_row(std::move(row));
  }
  table.write(out);
}

void export_features(const std::vector<SessionFeatures>& features, std::span<const Move> moves,
                     const std::filesystem::path& path) {
  std::ostringstream out;
  write_features(features, moves, out);
  detail::atomic_write_file(path, out.str());
}

std::vector<SessionFeatures> import_features(const std::filesystem::path& path) {
  CsvTable table = CsvTable::read(path);
  const std::size_t id_col = table.require_column("session_id");
  const std::size_t dur_col = table.require_column("duration_hours");
  std::vector<std::pair<Move, std::size_t>> count_cols, rate_cols;
  for (std::size_t c = 0; c < table.header().size(); ++c) {
    const std::string& name = table.header()[c];
    if (name.rfind("count_", 0) == 0) {
      count_cols.emplace_back(parse_move(name.substr(6)), c);
    } else if (name.rfind("rate_", 0) == 0) {
      rate_cols.emplace_back(parse_move(name.substr(5)), c);
    }
  }
  std::vector<SessionFeatures> out;
  out.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& row = table.rows()[r];
    SessionFeatures f;
    f.session_id = row[id_col];
    auto dur = parse_double(row[dur_col]);
    if (!dur) throw ParseError(path.string(), r + 2, "bad duration_hours");
    f.duration_hours = *dur;
    for (auto [m, c] : count_cols) {
      auto v = parse_double(row[c]);
      if (!v || *v < 0) throw ParseError(path.string(), r + 2, "bad count");
      f.counts[m] = static_cast<std::size_t>(*v);
    }
    for (auto [m, c] : rate_cols) {
      auto v = parse_double(row[c]);
      if (!v) throw ParseError(path.string(), r + 2, "bad rate");
      f.rate_per_hour[m] = *v;
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace talkmoves
