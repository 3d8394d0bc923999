#include "talkmoves/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "fs_util.hpp"
#include "json_util.hpp"
#include "talkmoves/analysis.hpp"
#include "talkmoves/annotation.hpp"
#include "talkmoves/corpus.hpp"
#include "talkmoves/csv.hpp"
#include "talkmoves/errors.hpp"
#include "talkmoves/example_builder.hpp"
#include "talkmoves/hashing.hpp"
#include "talkmoves/inference.hpp"
#include "talkmoves/tokenizer.hpp"

namespace talkmoves {

namespace fs = std::filesystem;
using detail::ordered_json;
using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "corpus_dir",  "output_dir",   "seed",        "tokenizer",
      "sample_size", "train_ratio",  "annotations", "outcomes",
      "wer",         "overrides",    "thresholds",  "exclude_poor_transcription",
      "segment_level_counting",      "enable_model_utterance",
      "jobs",        "backend",      "resume",      "remote_poll_interval_seconds",
      "remote_poll_deadline_seconds"};
  return keys;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config field '") + key + "' has the wrong type");
  }
}

std::uint64_t parse_uint(const std::string& text, const char* what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + " must be a non-negative integer, got '" + text + "'");
  }
  if (used != text.size()) {
    throw ValidationError(std::string(what) + " must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::string read_text(const fs::path& p) { return detail::read_file(p); }

void write_text(const fs::path& p, const std::string& s) { detail::atomic_write_file(p, s); }

// Every artifact directory carries a schema tag.
void tag_dir(const fs::path& dir, std::string_view schema) {
  fs::create_directories(dir);
  ordered_json j;
  j["schema"] = schema;
  j["version"] = kPipelineVersion;
  write_text(dir / "SCHEMA.json", j.dump(2) + "\n");
}

std::string jsonl(const std::vector<AnnotationExample>& examples) {
  std::ostringstream out;
  write_examples(examples, out);
  return out.str();
}

std::shared_ptr<const Tokenizer> tokenizer_for(const PipelineConfig& c) { return make_tokenizer(c.tokenizer); }

std::vector<fs::path> files_in(const fs::path& dir, std::string_view suffix) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string stem_of(const fs::path& p, std::string_view suffix) {
  const std::string name = p.filename().string();
  return name.substr(0, name.size() - suffix.size());
}

ModelSuite load_suite(const PipelineConfig& config, const OutputLayout& layout) {
  ModelSuite suite;
  for (Move m : config.moves()) {
    const fs::path dir = layout.model(m);
    if (!fs::exists(dir / "config.json")) {
      throw IOError("no trained model for " + std::string(move_name(m)) + " under " + dir.string() +
                    "; run train first");
    }
    const ModelHandle cfg = load_model_config(dir);
    auto backend = make_backend(cfg.training.backend, config.backend_options());
    suite[m] = SuiteEntry{load_model(dir, *backend), backend};
  }
  return suite;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) throw ValidationError("unknown config field '" + key + "'");
  }
  PipelineConfig c;
  c.corpus_dir = resolve(base_dir, field<std::string>(j, "corpus_dir", ""));
  c.output_dir = resolve(base_dir, field<std::string>(j, "output_dir", ""));
  if (j.contains("seed") && !j.at("seed").is_null()) {
    const json& s = j.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && s.get<long long>() < 0 && !s.is_number_unsigned())) {
      throw ValidationError("config field 'seed' must be a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  c.tokenizer = field<std::string>(j, "tokenizer", c.tokenizer);
  const long long sample = field<long long>(j, "sample_size", static_cast<long long>(c.sample_size));
  if (sample <= 0) throw ValidationError("sample_size must be positive");
  c.sample_size = static_cast<std::size_t>(sample);
  c.train_ratio = field<double>(j, "train_ratio", c.train_ratio);
  c.annotations_path = resolve(base_dir, field<std::string>(j, "annotations", ""));
  c.outcomes_path = resolve(base_dir, field<std::string>(j, "outcomes", ""));
  c.wer_path = resolve(base_dir, field<std::string>(j, "wer", ""));
  if (j.contains("overrides")) {
    const json& o = j.at("overrides");
    if (!o.is_object()) throw ValidationError("overrides must be an object keyed by move");
    for (const auto& [name, patch] : o.items()) {
      if (!patch.is_object()) throw ValidationError("override for '" + name + "' must be an object");
      for (const auto& [k, v] : patch.items()) {
        if (k != "preprocess" && k != "training") {
          throw ValidationError("override for '" + name + "' has unknown section '" + k + "'");
        }
      }
      c.overrides[parse_move(name)] = patch;
    }
  }
  if (j.contains("thresholds")) {
    const json& t = j.at("thresholds");
    if (!t.is_object()) throw ValidationError("thresholds must be an object keyed by move");
    for (const auto& [name, v] : t.items()) {
      if (!v.is_number()) throw ValidationError("threshold for '" + name + "' must be a number");
      c.thresholds[parse_move(name)] = v.get<double>();
    }
  }
  c.exclude_poor_transcription = field<bool>(j, "exclude_poor_transcription", false);
  c.segment_level_counting = field<bool>(j, "segment_level_counting", false);
  c.enable_model_utterance = field<bool>(j, "enable_model_utterance", false);
  const long long jobs = field<long long>(j, "jobs", 1);
  if (jobs < 1) throw ValidationError("jobs must be at least 1");
  c.jobs = static_cast<std::size_t>(jobs);
  if (j.contains("backend") && !j.at("backend").is_null()) {
    c.backend = parse_backend(field<std::string>(j, "backend", ""));
  }
  c.resume = field<bool>(j, "resume", false);
  c.remote_poll_interval_seconds =
      field<double>(j, "remote_poll_interval_seconds", c.remote_poll_interval_seconds);
  c.remote_poll_deadline_seconds =
      field<double>(j, "remote_poll_deadline_seconds", c.remote_poll_deadline_seconds);
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("config file " + path.string() + " does not exist");
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, fs::absolute(path).parent_path());
}

void PipelineConfig::apply_environment() {
  if (const char* v = std::getenv("TALKMOVES_SEED"); v && *v) seed = parse_uint(v, "TALKMOVES_SEED");
  if (const char* v = std::getenv("TALKMOVES_JOBS"); v && *v) {
    jobs = static_cast<std::size_t>(parse_uint(v, "TALKMOVES_JOBS"));
    if (jobs == 0) throw ValidationError("TALKMOVES_JOBS must be at least 1");
  }
  if (const char* v = std::getenv("TALKMOVES_BACKEND"); v && *v) backend = parse_backend(v);
  if (const char* v = std::getenv("TALKMOVES_OUTPUT_DIR"); v && *v) output_dir = fs::absolute(v);
}

void PipelineConfig::validate() const {
  if (!seed) throw ValidationError("a seed is required (config 'seed', TALKMOVES_SEED or --seed)");
  if (corpus_dir.empty()) throw ValidationError("corpus_dir is required");
  if (!fs::is_directory(corpus_dir)) {
    throw ValidationError("corpus_dir " + corpus_dir.string() + " is not a directory");
  }
  if (output_dir.empty()) throw ValidationError("output_dir is required");
  for (const auto* p : {&annotations_path, &outcomes_path, &wer_path}) {
    if (!p->empty() && !fs::is_regular_file(*p)) {
      throw ValidationError("referenced file " + p->string() + " does not exist");
    }
  }
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw ValidationError("train_ratio must be in (0, 1)");
  }
  if (jobs == 0) throw ValidationError("jobs must be at least 1");
  try {
    make_tokenizer(tokenizer);
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
  for (const auto& [m, t] : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw ValidationError("threshold for " + std::string(move_name(m)) + " must be in [0, 1]");
    }
  }
  if (!(remote_poll_interval_seconds > 0.0) || !(remote_poll_deadline_seconds > 0.0)) {
    throw ValidationError("remote polling intervals must be positive");
  }
  for (Move m : kAllMoves) move_config(m);
}

std::uint64_t PipelineConfig::run_seed() const {
  if (!seed) throw ValidationError("a seed is required");
  return *seed;
}

std::vector<Move> PipelineConfig::moves() const { return active_moves(enable_model_utterance); }

MoveConfig PipelineConfig::move_config(Move move) const {
  MoveConfig mc = best_config_for(move);
  if (auto it = overrides.find(move); it != overrides.end()) {
    try {
      if (it->second.contains("preprocess")) {
        mc.preprocess = preprocess_from_json(it->second.at("preprocess"), mc.preprocess);
      }
      if (it->second.contains("training")) {
        mc.training = training_from_json(it->second.at("training"), mc.training);
      }
    } catch (const json::exception& e) {
      throw ValidationError("override for " + std::string(move_name(move)) + ": " + e.what());
    }
  }
  if (backend) mc.training.backend = *backend;
  if (auto it = thresholds.find(move); it != thresholds.end()) {
    mc.training.decision_threshold = it->second;
  }
  mc.training.seed = derive_seed(seed.value_or(0), "train:" + std::string(move_name(move)));
  mc.preprocess.validate();
  mc.training.validate();
  return mc;
}

BackendOptions PipelineConfig::backend_options() const {
  BackendOptions o;
  o.poll_interval_seconds = remote_poll_interval_seconds;
  o.poll_deadline_seconds = remote_poll_deadline_seconds;
  return o;
}

json PipelineConfig::snapshot() const {
  ordered_json j;
  j["corpus_dir"] = corpus_dir.string();
  j["output_dir"] = output_dir.string();
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["tokenizer"] = tokenizer;
  j["sample_size"] = sample_size;
  j["train_ratio"] = train_ratio;
  j["annotations"] = annotations_path.string();
  j["outcomes"] = outcomes_path.string();
  j["wer"] = wer_path.string();
  ordered_json ov = ordered_json::object();
  for (const auto& [m, patch] : overrides) ov[std::string(move_name(m))] = ordered_json::parse(patch.dump());
  j["overrides"] = ov;
  ordered_json th = ordered_json::object();
  for (const auto& [m, t] : thresholds) th[std::string(move_name(m))] = t;
  j["thresholds"] = th;
  j["exclude_poor_transcription"] = exclude_poor_transcription;
  j["segment_level_counting"] = segment_level_counting;
  j["enable_model_utterance"] = enable_model_utterance;
  j["jobs"] = jobs;
  j["backend"] = backend ? json(std::string(backend_name(*backend))) : json(nullptr);
  j["resume"] = resume;
  j["remote_poll_interval_seconds"] = remote_poll_interval_seconds;
  j["remote_poll_deadline_seconds"] = remote_poll_deadline_seconds;
  return json::parse(j.dump());
}

fs::path OutputLayout::model(Move move) const { return models() / std::string(move_name(move)); }

fs::path OutputLayout::manifest(std::string_view subcommand) const {
  return root / "manifests" / (std::string(subcommand) + ".json");
}

void atomic_write(const fs::path& path, std::string_view contents) {
  detail::atomic_write_file(path, contents);
}

void write_manifest(const PipelineConfig& config, std::string_view subcommand,
                    const std::vector<fs::path>& inputs) {
  const OutputLayout layout{config.output_dir};
  ordered_json j;
  j["schema"] = kManifestSchema;
  j["subcommand"] = subcommand;
  j["version"] = kPipelineVersion;
  // Snapshot keys come back sorted from nlohmann::json; keep them that way.
  j["config"] = ordered_json::parse(config.snapshot().dump());
  std::vector<fs::path> sorted = inputs;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  ordered_json in = ordered_json::array();
  for (const auto& p : sorted) {
    ordered_json e;
    e["path"] = p.string();
    e["sha256"] = fs::is_regular_file(p) ? sha256_file(p) : std::string();
    in.push_back(std::move(e));
  }
  j["inputs"] = in;
  tag_dir(layout.manifest(subcommand).parent_path(), kManifestSchema);
  write_text(layout.manifest(subcommand), j.dump(2) + "\n");
}

StepResult run_ingest(const PipelineConfig& config) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  const fs::path& in = config.corpus_dir;
  std::set<std::string> ids;
  for (const auto& p : files_in(in, ".session.jsonl")) ids.insert(stem_of(p, ".session.jsonl"));
  for (const auto& p : files_in(in, ".segments.jsonl")) ids.insert(stem_of(p, ".segments.jsonl"));
  if (ids.empty()) throw EmptyInputError("no session inputs found in " + in.string());

  std::vector<fs::path> inputs;
  std::vector<Session> sessions;
  std::size_t utterances = 0;
  for (const auto& id : ids) {
    const fs::path session_file = in / (id + ".session.jsonl");
    const fs::path segments_file = in / (id + ".segments.jsonl");
    const fs::path speakers_file = in / (id + ".speakers.jsonl");
    const fs::path chat_file = in / (id + ".chat.jsonl");

    Session session;
    session.session_id = id;
    std::vector<Utterance> audio;
    if (fs::exists(session_file)) {
      inputs.push_back(session_file);
      SessionRecords rec = load_session_records(session_file);
      if (rec.header) {
        if (!rec.header->session_id.empty() && rec.header->session_id != id) {
          throw ValidationError(session_file.string() + ": header session_id '" +
                                rec.header->session_id + "' does not match the file name");
        }
        session.instructor_id = rec.header->instructor_id;
        session.declared_duration_hours = rec.header->declared_duration_hours;
        session.metadata = rec.header->metadata;
      }
      audio = std::move(rec.utterances);
    }
    if (fs::exists(segments_file)) {
      if (!audio.empty()) {
        throw ValidationError("session '" + id + "' has both diarized turns and raw segments");
      }
      if (!fs::exists(speakers_file)) {
        throw ValidationError("session '" + id + "' has raw segments but no " +
                              speakers_file.filename().string());
      }
      inputs.push_back(segments_file);
      inputs.push_back(speakers_file);
      const auto intervals = load_speaker_intervals(speakers_file);
      audio = assign_speakers(load_raw_segments(segments_file), intervals, id);
      if (session.instructor_id.empty()) {
        for (const auto& iv : intervals) {
          if (iv.role == SpeakerRole::instructor) {
            session.instructor_id = iv.speaker_id;
            break;
          }
        }
      }
    }
    for (auto& u : audio) {
      if (u.session_id.empty()) u.session_id = id;
    }
    std::vector<Utterance> chat;
    if (fs::exists(chat_file)) {
      inputs.push_back(chat_file);
      chat = load_chat_log(chat_file);
      for (std::size_t i = 0; i < chat.size(); ++i) {
        if (chat[i].session_id.empty()) chat[i].session_id = id;
        if (chat[i].utterance_id.empty()) chat[i].utterance_id = id + "-c" + std::to_string(i);
      }
    }
    session.utterances = merge_chat(audio, chat);
    validate_session(session);
    utterances += session.utterances.size();
    sessions.push_back(std::move(session));
  }

  // Replace the whole sessions directory so stale sessions do not linger.
  const fs::path out = layout.sessions();
  if (fs::exists(out)) {
    for (const auto& p : files_in(out, ".jsonl")) fs::remove(p);
  }
  tag_dir(out, "talkmoves.sessions/1");
  for (const auto& s : sessions) {
    std::ostringstream os;
    write_session(s, os);
    write_text(out / (s.session_id + ".jsonl"), os.str());
  }
  write_manifest(config, "ingest", inputs);
  return {"ingested " + std::to_string(sessions.size()) + " sessions (" +
              std::to_string(utterances) + " utterances)",
          0};
}

StepResult run_build_dataset(const PipelineConfig& config) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  const auto sessions = load_sessions(layout.sessions());
  if (sessions.empty()) throw EmptyInputError("no ingested sessions; run ingest first");
  const auto tokenizer = tokenizer_for(config);

  SampleOptions opts;
  opts.count = config.sample_size;
  opts.seed = derive_seed(config.run_seed(), "sample");
  auto examples = sample_examples(sessions, opts, *tokenizer);

  std::vector<fs::path> inputs;
  for (const auto& s : sessions) inputs.push_back(layout.sessions() / (s.session_id + ".jsonl"));
  std::vector<AnnotationExample> labeled;
  std::size_t excluded = 0;
  if (!config.annotations_path.empty()) {
    inputs.push_back(config.annotations_path);
    attach_labels(examples, load_annotations(config.annotations_path));
    for (const auto& ex : examples) {
      if (!ex.gold) continue;
      if (config.exclude_poor_transcription && ex.gold->poor_transcription) {
        ++excluded;
        continue;
      }
      labeled.push_back(ex);
    }
  }
  tag_dir(layout.dataset(), "talkmoves.dataset/1");
  write_text(layout.examples(), jsonl(examples));
  write_text(layout.labeled(), jsonl(labeled));
  TrainTestSplit split;
  if (!labeled.empty()) {
    split = train_test_split(labeled, config.train_ratio, derive_seed(config.run_seed(), "split"));
  }
  write_text(layout.train(), jsonl(split.train));
  write_text(layout.test(), jsonl(split.test));
  write_manifest(config, "build-dataset", inputs);
  return {"sampled " + std::to_string(examples.size()) + " examples, " +
              std::to_string(labeled.size()) + " labeled (" + std::to_string(excluded) +
              " excluded), train " + std::to_string(split.train.size()) + " / test " +
              std::to_string(split.test.size()),
          0};
}

StepResult run_annotate_stats(const PipelineConfig& config) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  if (config.annotations_path.empty()) throw ValidationError("annotate-stats needs 'annotations'");
  const auto examples = load_examples(layout.labeled());
  std::set<std::string> ids;
  std::vector<LabelSet> gold;
  for (const auto& ex : examples) {
    ids.insert(ex.example_id);
    if (ex.gold) gold.push_back(*ex.gold);
  }
  std::vector<AnnotationRecord> records;
  for (auto& r : load_annotations(config.annotations_path)) {
    if (ids.count(r.example_id)) records.push_back(std::move(r));
  }

  ordered_json j;
  j["schema"] = "talkmoves.annotation-stats/1";
  j["examples"] = examples.size();
  ordered_json agreement = ordered_json::object();
  if (!records.empty()) {
    for (Move m : config.moves()) {
      const AgreementReport rep = pairwise_agreement(records, m);
      ordered_json a;
      a["mean"] = rep.mean;
      ordered_json per = ordered_json::object();
      for (const auto& [ann, v] : rep.per_annotator) per[ann] = v;
      a["per_annotator"] = per;
      agreement[std::string(move_name(m))] = a;
    }
    j["any_label_overlap"] = any_label_overlap_rate(records);
  } else {
    j["any_label_overlap"] = nullptr;
  }
  j["agreement"] = agreement;
  ordered_json dist = ordered_json::object();
  if (!gold.empty()) {
    for (const auto& [m, v] : label_distribution(gold)) dist[std::string(move_name(m))] = v;
  }
  j["label_distribution"] = dist;
  std::vector<fs::path> inputs = {layout.labeled(), config.annotations_path};
  if (!config.wer_path.empty()) {
    inputs.push_back(config.wer_path);
    CsvTable t = CsvTable::read(config.wer_path);
    const auto ref = t.require_column("reference");
    const auto hyp = t.require_column("hypothesis");
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& row : t.rows()) pairs.emplace_back(row[ref], row[hyp]);
    j["word_error_rate"] = corpus_word_error_rate(pairs);
  }
  tag_dir(layout.stats().parent_path(), "talkmoves.stats/1");
  write_text(layout.stats(), j.dump(2) + "\n");
  write_manifest(config, "annotate-stats", inputs);
  return {"annotation statistics over " + std::to_string(examples.size()) + " examples", 0};
}

StepResult run_train(const PipelineConfig& config, std::optional<Move> only) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  const auto train = load_examples(layout.train());
  if (train.empty()) throw EmptyInputError("training split is empty; run build-dataset first");
  const auto tokenizer = tokenizer_for(config);
  std::vector<Move> moves = only ? std::vector<Move>{*only} : config.moves();
  std::string summary;
  tag_dir(layout.models(), kModelSchema);
  for (Move m : moves) {
    const MoveConfig mc = config.move_config(m);
    auto backend = make_backend(mc.training.backend, config.backend_options());
    TrainingTrace trace;
    ModelHandle model =
        train_move_model(m, train, mc.preprocess, mc.training, *backend, *tokenizer, &trace);
    model.tokenizer = tokenizer->name();
    save_model(model, layout.model(m));
    if (!summary.empty()) summary += "\n";
    summary += std::string(move_name(m)) + ": " + std::to_string(trace.positives) + " positives, " +
               std::to_string(trace.negatives) + " negatives";
  }
  write_manifest(config, only ? "train-" + std::string(move_name(*only)) : "train",
                 {layout.train()});
  return {summary, 0};
}

StepResult run_evaluate(const PipelineConfig& config, std::optional<Move> only) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  const auto test = load_examples(layout.test());
  const auto tokenizer = tokenizer_for(config);
  std::vector<Move> moves = only ? std::vector<Move>{*only} : config.moves();
  CsvTable csv({"move", "threshold", "tp", "fp", "fn", "tn", "precision", "recall", "f1",
                "precision_undefined", "recall_undefined", "f1_undefined"});
  ordered_json reports = ordered_json::array();
  std::string summary;
  std::vector<fs::path> inputs = {layout.test()};
  for (Move m : moves) {
    const fs::path dir = layout.model(m);
    const ModelHandle cfg = load_model_config(dir);
    auto backend = make_backend(cfg.training.backend, config.backend_options());
    const ModelHandle model = load_model(dir, *backend);
    inputs.push_back(dir / "config.json");
    inputs.push_back(dir / "state.json");
    const EvalReport r = evaluate(model, *backend, test, model.threshold(), *tokenizer);
    csv.add_row({std::string(move_name(m)), fmt(model.threshold()), std::to_string(r.true_positive),
                 std::to_string(r.false_positive), std::to_string(r.false_negative),
                 std::to_string(r.true_negative), fmt(r.precision), fmt(r.recall), fmt(r.f1),
                 r.precision_undefined ? "1" : "0", r.recall_undefined ? "1" : "0",
                 r.f1_undefined ? "1" : "0"});
    reports.push_back(ordered_json::parse(to_json(r).dump()));
    if (!summary.empty()) summary += "\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s P=%.3f R=%.3f F1=%.3f", std::string(move_name(m)).c_str(),
                  r.precision, r.recall, r.f1);
    summary += buf;
  }
  tag_dir(layout.eval_csv().parent_path(), "talkmoves.eval/1");
  std::ostringstream os;
  csv.write(os);
  write_text(layout.eval_csv(), os.str());
  write_text(layout.eval_json(), reports.dump(2) + "\n");
  write_manifest(config, "evaluate", inputs);
  return {summary, 0};
}

StepResult run_infer(const PipelineConfig& config, const std::atomic<bool>* cancel,
                     const SessionProgress& progress) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  const auto sessions = load_sessions(layout.sessions());
  if (sessions.empty()) throw EmptyInputError("no ingested sessions; run ingest first");
  const auto tokenizer = tokenizer_for(config);
  const ModelSuite suite = load_suite(config, layout);

  InferenceOptions opts;
  opts.jobs = config.jobs;
  opts.resume = config.resume;
  opts.cancel = cancel;
  opts.on_session_done = progress;
  tag_dir(layout.predictions().parent_path(), kCheckpointSchema);
  const InferenceSummary s =
      predict_corpus(suite, sessions, layout.checkpoint(), layout.predictions(), *tokenizer, opts);

  std::vector<fs::path> inputs;
  for (const auto& ss : sessions) inputs.push_back(layout.sessions() / (ss.session_id + ".jsonl"));
  for (const auto& [m, e] : suite) {
    inputs.push_back(layout.model(m) / "config.json");
    inputs.push_back(layout.model(m) / "state.json");
  }
  write_manifest(config, "infer", inputs);
  const std::string counts = std::to_string(s.completed) + " completed, " +
                             std::to_string(s.skipped) + " resumed, " +
                             std::to_string(s.failed) + " failed";
  if (s.cancelled) {
    throw IncompleteRunError("inference interrupted (" + counts + "); rerun with --resume");
  }
  if (s.failed > 0) {
    std::string list;
    for (const auto& id : s.failed_sessions) list += (list.empty() ? "" : ", ") + id;
    throw IncompleteRunError("inference incomplete (" + counts + "; failed: " + list +
                             "); rerun with --resume");
  }
  return {"inference over " + std::to_string(sessions.size()) + " sessions: " + counts, 0};
}

StepResult run_features(const PipelineConfig& config) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  const auto sessions = load_sessions(layout.sessions());
  const auto predictions = load_predictions(layout.predictions());
  std::map<std::string, std::vector<PredictionRecord>> by_session;
  for (const auto& r : predictions) by_session[r.session_id].push_back(r);
  const auto moves = config.moves();
  const CountingMode mode =
      config.segment_level_counting ? CountingMode::segment : CountingMode::utterance;
  std::vector<SessionFeatures> features;
  for (const auto& s : sessions) {
    features.push_back(aggregate_session(by_session[s.session_id], s, moves, mode));
  }
  tag_dir(layout.features().parent_path(), "talkmoves.features/1");
  export_features(features, moves, layout.features());
  write_manifest(config, "features", {layout.predictions()});
  return {"features for " + std::to_string(features.size()) + " sessions", 0};
}

StepResult run_regress(const PipelineConfig& config) {
  config.validate();
  if (config.outcomes_path.empty()) throw ValidationError("regress needs 'outcomes'");
  const OutputLayout layout{config.output_dir};
  const auto features = import_features(layout.features());
  const CsvTable outcomes = CsvTable::read(config.outcomes_path);
  std::vector<Move> moves(kTalkMoves.begin(), kTalkMoves.end());
  const auto cells = run_table(features, outcomes, default_specs(moves));
  std::size_t failed = 0;
  for (const auto& c : cells) failed += c.ok ? 0 : 1;

  tag_dir(layout.regression_csv().parent_path(), "talkmoves.regression/1");
  std::ostringstream csv;
  write_table_csv(cells, csv);
  write_text(layout.regression_csv(), csv.str());
  write_text(layout.regression_txt(),
             render_table_text(cells, false) + "\n" + render_table_text(cells, true));
  write_manifest(config, "regress", {layout.features(), config.outcomes_path});
  return {std::to_string(cells.size()) + " regression cells, " + std::to_string(failed) + " failed",
          failed};
}

StepResult run_report(const PipelineConfig& config) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  std::ostringstream out;
  out << "talkmoves report (version " << kPipelineVersion << ", seed " << config.run_seed()
      << ")\n\n";
  std::vector<fs::path> inputs;
  auto section = [&](const std::string& title, const fs::path& p, auto&& body) {
    out << "== " << title << " ==\n";
    if (fs::exists(p)) {
      inputs.push_back(p);
      body(p);
    } else {
      out << "(missing: " << p.filename().string() << ")\n";
    }
    out << "\n";
  };
  section("Annotation statistics", layout.stats(), [&](const fs::path& p) {
    const json j = json::parse(read_text(p));
    out << "examples: " << j.value("examples", 0) << "\n";
    if (j.contains("any_label_overlap") && j["any_label_overlap"].is_number()) {
      out << "any-label overlap: " << fmt(j["any_label_overlap"].get<double>()) << "\n";
    }
    if (j.contains("agreement")) {
      for (const auto& [m, a] : j["agreement"].items()) {
        out << "agreement " << m << ": " << fmt(a.value("mean", 0.0)) << "\n";
      }
    }
    if (j.contains("word_error_rate")) {
      out << "word error rate: " << fmt(j["word_error_rate"].get<double>()) << "\n";
    }
  });
  section("Classifier evaluation", layout.eval_csv(), [&](const fs::path& p) {
    const CsvTable t = CsvTable::read(p);
    const auto mc = t.require_column("move");
    const auto pc = t.require_column("precision");
    const auto rc = t.require_column("recall");
    const auto fc = t.require_column("f1");
    for (const auto& row : t.rows()) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "%-16s precision %.3f  recall %.3f  f1 %.3f\n",
                    row[mc].c_str(), parse_double(row[pc]).value_or(0.0),
                    parse_double(row[rc]).value_or(0.0), parse_double(row[fc]).value_or(0.0));
      out << buf;
    }
  });
  section("Talk-move rates", layout.features(), [&](const fs::path& p) {
    const auto features = import_features(p);
    out << "sessions: " << features.size() << "\n";
    for (Move m : config.moves()) {
      double total = 0.0;
      for (const auto& f : features) {
        auto it = f.rate_per_hour.find(m);
        if (it != f.rate_per_hour.end()) total += it->second;
      }
      char buf[120];
      std::snprintf(buf, sizeof buf, "%-16s mean %.3f per hour\n", std::string(move_name(m)).c_str(),
                    features.empty() ? 0.0 : total / static_cast<double>(features.size()));
      out << buf;
    }
  });
  section("Outcome regressions", layout.regression_txt(),
          [&](const fs::path& p) { out << read_text(p); });
  write_text(layout.report(), out.str());
  write_manifest(config, "report", inputs);
  return {"report written to " + layout.report().string(), 0};
}

}  // namespace talkmoves
