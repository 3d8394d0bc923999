#include "talkmoves/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fs_util.hpp"
#include "json_util.hpp"
#include "talkmoves/errors.hpp"
#include "talkmoves/example_builder.hpp"
#include "talkmoves/hashing.hpp"
#include "talkmoves/analysis.hpp"
#include "talkmoves/text.hpp"
#include "talkmoves/tokenizer.hpp"

namespace talkmoves::synthetic {

namespace {

// No word here appears in any marker phrase.
constexpr std::array<std::string_view, 64> kInstructorWords = {
    "the",    "loop",     "variable", "function", "returns", "list",    "index",  "value",
    "program", "string",  "prints",   "counter",  "grid",    "robot",   "while",  "condition",
    "step",   "next",     "line",     "code",     "python",  "karel",   "square", "beeper",
    "moves",  "turns",    "left",     "right",    "until",   "result",  "input",  "output",
    "number", "total",    "call",     "parameter", "argument", "scope", "error",  "bug",
    "test",   "case",     "first",    "second",   "then",    "after",   "before", "each",
    "item",   "we",       "check",    "update",   "store",   "read",    "file",   "data",
    "here",   "now",      "this",     "is",       "a",       "of",      "in",     "our"};

constexpr std::array<std::string_view, 24> kStudentWords = {
    "i",     "think", "my",     "loop",  "stops", "early",   "the",   "grid",
    "is",    "hard",  "maybe",  "it",    "works", "now",     "karel", "turns",
    "left",  "bug",   "in",     "line",  "three", "confused", "okay", "yes"};

constexpr std::array<std::string_view, 6> kMarkers = {
    "Adding onto that.",            // adding_on
    "Connecting everyone together.",  // connecting
    "Anybody want to share?",       // eliciting
    "Why exactly though?",          // probing
    "So you are saying.",           // revoicing
    "Watch me demonstrate."};       // model_utterance

std::size_t move_index(Move m) { return static_cast<std::size_t>(m); }

template <std::size_t N>
std::string sentence(std::mt19937_64& rng, const std::array<std::string_view, N>& words,
                     int min_words, int max_words) {
  std::uniform_int_distribution<int> len(min_words, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);
  const int n = len(rng);
  std::string s;
  for (int i = 0; i < n; ++i) {
    std::string w(words[pick(rng)]);
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (i) s += ' ';
    s += w;
  }
  return s + ".";
}

double move_rate(const CorpusOptions& o, Move m) {
  switch (m) {
    case Move::adding_on: return o.adding_on_rate;
    case Move::connecting: return o.connecting_rate;
    case Move::eliciting: return o.eliciting_rate;
    case Move::probing: return o.probing_rate;
    case Move::revoicing: return o.revoicing_rate;
    case Move::model_utterance: return o.model_utterance_rate;
  }
  return 0.0;
}

std::string instructor_text(std::mt19937_64& rng, const CorpusOptions& o) {
  std::bernoulli_distribution is_long(o.long_turn_rate);
  const bool long_turn = is_long(rng);
  std::uniform_int_distribution<int> n_sentences = long_turn
      ? std::uniform_int_distribution<int>(26, 36) : std::uniform_int_distribution<int>(1, 3);
  std::vector<std::string> parts;
  const int n = n_sentences(rng);
  for (int i = 0; i < n; ++i) parts.push_back(sentence(rng, kInstructorWords, 6, 12));
  for (Move m : kAllMoves) {
    std::bernoulli_distribution has(move_rate(o, m));
    if (!has(rng)) continue;
    std::uniform_int_distribution<std::size_t> where(0, parts.size());
    parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(where(rng)),
                 std::string(kMarkers[move_index(m)]));
  }
  return join(parts, " ");
}

std::string pad2(std::size_t v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? std::string(2 - s.size(), '0') + s : s;
}

double round_to(double v, double step) { return std::round(v / step) * step; }

}  // namespace

std::string_view marker_phrase(Move move) { return kMarkers[move_index(move)]; }

LabelSet rule_labels(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  LabelSet labels;
  for (Move m : kAllMoves) {
    const std::string marker = to_lower_ascii(kMarkers[move_index(m)]);
    if (lower.find(marker) != std::string::npos) labels.set(m, true);
  }
  return labels;
}

Corpus make_corpus(const CorpusOptions& options) {
  if (options.sessions == 0 || options.instructors == 0) {
    throw ValidationError("synthetic corpus needs at least one session and instructor");
  }
  Corpus corpus;
  std::mt19937_64 rng(derive_seed(options.seed, "synthetic:corpus"));
  WhitespaceTokenizer tokenizer;
  const int segment_limit = PreprocessConfig{}.segment_token_limit;

  // Instructor attributes, chosen to keep the covariate design full rank.
  struct InstructorInfo { double female, first_time, in_us, age; };
  std::vector<InstructorInfo> instructors;
  std::uniform_real_distribution<double> age_dist(21.0, 55.0);
  for (std::size_t i = 0; i < options.instructors; ++i) {
    instructors.push_back({static_cast<double>(i % 2), static_cast<double>((i / 2) % 2),
                           static_cast<double>((i % 3) != 0), std::round(age_dist(rng))});
  }

  std::vector<std::string> header = {std::string(kSessionIdColumn), std::string(kStudentIdColumn),
                                     std::string(kInstructorIdColumn)};
  for (auto c : kInstructorCovariateColumns) header.emplace_back(c);
  for (auto c : kSectionCovariateColumns) header.emplace_back(c);
  for (Outcome o : kOutcomes) header.emplace_back(outcome_name(o));
  corpus.outcomes = CsvTable(header);

  const std::array<std::string_view, 6> annotators = {"ann-1", "ann-2", "ann-3",
                                                      "ann-4", "ann-5", "ann-6"};
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t s = 0; s < options.sessions; ++s) {
    Session session;
    session.session_id = "s" + pad2(s + 1);
    const std::size_t inst = s % options.instructors;
    session.instructor_id = "inst-" + pad2(inst + 1);
    session.metadata["course"] = "cip-synthetic";
    std::uniform_int_distribution<int> n_students_dist(4, 8);
    const int n_students = n_students_dist(rng);
    const double span = std::uniform_real_distribution<double>(2700.0, 4500.0)(rng);
    const std::size_t turns = options.instructor_turns * 2;
    std::bernoulli_distribution chat(options.chat_rate);
    std::uniform_int_distribution<int> pick_student(1, n_students);

    std::size_t audio_index = 0, chat_index = 0;
    for (std::size_t t = 0; t < turns; ++t) {
      Utterance u;
      u.session_id = session.session_id;
      const bool instructor_turn = (t % 2 == 1);
      u.text = instructor_turn ? instructor_text(rng, options)
                               : sentence(rng, kStudentWords, 3, 9);
      const double slot = span / static_cast<double>(turns);
      u.start_time = round_to(slot * static_cast<double>(t) + 1.0, 0.01);
      const double words = static_cast<double>(split_whitespace(u.text).size());
      u.end_time = round_to(u.start_time + std::min(slot * 0.8, 0.35 * words + 0.5), 0.01);
      if (instructor_turn) {
        u.speaker_role = SpeakerRole::instructor;
        u.speaker_id = session.instructor_id;
      } else {
        u.speaker_role = SpeakerRole::student;
        u.speaker_id = session.session_id + "-st" + std::to_string(pick_student(rng));
      }
      if (!instructor_turn && chat(rng)) {
        u.source = Source::chat;
        u.end_time = u.start_time;
        u.utterance_id = session.session_id + "-c" + std::to_string(chat_index++);
      } else {
        u.utterance_id = session.session_id + "-u" + std::to_string(audio_index++);
      }
      session.utterances.push_back(std::move(u));
    }
    session.declared_duration_hours = round_to(span / 3600.0 + 0.05, 0.001);
    validate_session(session);

    // Annotations for every segment of every instructor turn.
    std::size_t true_connecting = 0;
    for (const auto& u : session.utterances) {
      if (u.speaker_role != SpeakerRole::instructor) continue;
      if (rule_labels(u.text).get(Move::connecting)) ++true_connecting;
      for (const auto& seg : segment_long_utterance(u, segment_limit, tokenizer)) {
        const std::string example_id = u.utterance_id + "#" + std::to_string(seg.index);
        LabelSet gold = rule_labels(seg.text);
        if (gold.empty() && unit(rng) < 0.05) gold.off_task = true;
        if (unit(rng) < 0.02) gold.poor_transcription = true;
        std::uniform_int_distribution<std::size_t> pick(0, annotators.size() - 1);
        const std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        while (b == a) b = pick(rng);
        LabelSet partial;
        for (std::size_t col = 0; col < kLabelColumns.size(); ++col) {
          if (label_flag(gold, col) && unit(rng) < 0.85) set_label_flag(partial, col, true);
        }
        const bool a_full = unit(rng) < 0.5;
        corpus.annotations.push_back({example_id, std::string(annotators[a]), a_full ? gold : partial});
        corpus.annotations.push_back({example_id, std::string(annotators[b]), a_full ? partial : gold});
      }
    }

    // Section covariates and outcomes.
    const InstructorInfo& info = instructors[inst];
    std::array<double, 7> sec{};
    sec[0] = round_to(unit(rng), 0.01);
    sec[1] = round_to(unit(rng), 0.01);
    double remaining = 0.9;
    for (std::size_t i = 2; i < sec.size(); ++i) {
      sec[i] = round_to(unit(rng) * remaining * 0.5, 0.01);
      remaining -= sec[i];
    }
    const double hours = *session.declared_duration_hours;
    const double attendance = std::max(
        0.0, std::round(3.0 + 0.5 * static_cast<double>(true_connecting) / hours + 2.0 * unit(rng)));
    auto base_row = [&](const std::string& student) {
      std::vector<std::string> row = {session.session_id, student, session.instructor_id,
                                      format_double(info.female), format_double(info.first_time),
                                      format_double(info.in_us), format_double(info.age)};
      for (double v : sec) row.push_back(format_double(v));
      return row;
    };
    auto transcript_row = base_row("");
    transcript_row.insert(transcript_row.end(), {format_double(attendance), "", ""});
    corpus.outcomes.add_row(std::move(transcript_row));
    for (int st = 1; st <= n_students; ++st) {
      auto row = base_row(session.session_id + "-st" + std::to_string(st));
      const double rating = std::clamp(std::round(2.5 + unit(rng) * 1.5 +
                                                  0.05 * static_cast<double>(true_connecting)),
                                       1.0, 4.0);
      const double assignments = std::clamp(std::floor(unit(rng) * 4.0), 0.0, 3.0);
      row.insert(row.end(), {"", format_double(rating), format_double(assignments)});
      corpus.outcomes.add_row(std::move(row));
    }
    corpus.sessions.push_back(std::move(session));
  }
  return corpus;
}

void write_raw_corpus(const Corpus& corpus, const std::filesystem::path& dir, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(derive_seed(seed, "synthetic:raw"));
  std::uniform_real_distribution<double> jitter(0.0, 0.2);
  for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
    const Session& s = corpus.sessions[i];
    Session header = s;
    header.utterances.clear();
    std::vector<Utterance> audio, chat;
    for (const auto& u : s.utterances) (u.source == Source::chat ? chat : audio).push_back(u);

    const bool diarized = (i % 2 == 0);
    if (diarized) header.utterances = audio;
    std::ostringstream session_out;
    write_session(header, session_out);
    detail::atomic_write_file(dir / (s.session_id + ".session.jsonl"), session_out.str());

    if (!diarized) {
      std::string segments, speakers;
      for (const auto& u : audio) {
        detail::ordered_json seg;
        seg["start_time"] = u.start_time;
        seg["end_time"] = u.end_time;
        seg["text"] = u.text;
        segments += detail::dump_line(seg) + "\n";
        detail::ordered_json iv;
        iv["speaker_id"] = u.speaker_id;
        iv["role"] = role_name(u.speaker_role);
        iv["start_time"] = round_to(std::max(0.0, u.start_time - jitter(rng)), 0.01);
        iv["end_time"] = round_to(u.end_time + jitter(rng), 0.01);
        speakers += detail::dump_line(iv) + "\n";
      }
      detail::atomic_write_file(dir / (s.session_id + ".segments.jsonl"), segments);
      detail::atomic_write_file(dir / (s.session_id + ".speakers.jsonl"), speakers);
    }
    if (!chat.empty()) {
      std::string lines;
      for (const auto& u : chat) {
        detail::ordered_json j;
        j["record"] = "utterance";
        j["utterance_id"] = u.utterance_id;
        j["session_id"] = u.session_id;
        j["speaker_role"] = role_name(u.speaker_role);
        j["speaker_id"] = u.speaker_id;
        j["start_time"] = u.start_time;
        j["end_time"] = u.end_time;
        j["text"] = u.text;
        j["source"] = source_name(u.source);
        lines += detail::dump_line(j) + "\n";
      }
      detail::atomic_write_file(dir / (s.session_id + ".chat.jsonl"), lines);
    }
  }
  save_annotations(corpus.annotations, dir / "annotations.csv");
  corpus.outcomes.write(dir / "outcomes.csv");

  detail::ordered_json cfg;
  cfg["corpus_dir"] = ".";
  cfg["output_dir"] = "output";
  cfg["seed"] = 7;
  cfg["tokenizer"] = "whitespace";
  std::size_t instructor_turns = 0;
  for (const auto& s : corpus.sessions) {
    for (const auto& u : s.utterances) instructor_turns += u.speaker_role == SpeakerRole::instructor;
  }
  cfg["sample_size"] = instructor_turns;
  cfg["train_ratio"] = 0.8;
  cfg["annotations"] = "annotations.csv";
  cfg["outcomes"] = "outcomes.csv";
  cfg["backend"] = "linear_baseline";
  cfg["jobs"] = 1;
  detail::atomic_write_file(dir / "pipeline.json", cfg.dump(2) + "\n");
}

RegressionData make_regression_data(const RegressionDataOptions& options) {
  if (options.instructors < 2 || options.sessions_per_instructor == 0) {
    throw ValidationError("regression data needs at least 2 instructors");
  }
  std::mt19937_64 rng(derive_seed(options.seed, "synthetic:regression"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> cluster_noise(0.0, options.cluster_noise_sd);
  std::normal_distribution<double> row_noise(0.0, options.idiosyncratic_noise_sd);
  std::uniform_real_distribution<double> rate_dist(0.0, 20.0);

  RegressionData data;
  std::vector<std::string> header = {std::string(kSessionIdColumn), std::string(kStudentIdColumn),
                                     std::string(kInstructorIdColumn)};
  for (auto c : kInstructorCovariateColumns) header.emplace_back(c);
  for (auto c : kSectionCovariateColumns) header.emplace_back(c);
  header.emplace_back(outcome_name(Outcome::subsequent_attendance));
  data.outcomes = CsvTable(header);

  for (std::size_t g = 0; g < options.instructors; ++g) {
    const std::string instructor = "inst-" + pad2(g + 1);
    const double female = unit(rng) < 0.5 ? 1.0 : 0.0;
    const double first_time = unit(rng) < 0.4 ? 1.0 : 0.0;
    const double in_us = unit(rng) < 0.6 ? 1.0 : 0.0;
    const double age = 20.0 + 30.0 * unit(rng);
    const double u_g = cluster_noise(rng);
    // Rates share an instructor-level component, as real usage habits do.
    const double habit = 4.0 * unit(rng);
    for (std::size_t j = 0; j < options.sessions_per_instructor; ++j) {
      SessionFeatures f;
      f.session_id = instructor + "-s" + pad2(j + 1);
      f.duration_hours = 1.0;
      for (Move m : kTalkMoves) {
        const double r = habit + rate_dist(rng);
        f.rate_per_hour[m] = r;
        f.counts[m] = static_cast<std::size_t>(std::lround(r));
      }
      std::array<double, 7> sec{};
      for (double& v : sec) v = 0.12 * unit(rng);
      sec[0] = unit(rng);
      sec[1] = unit(rng);
      const double y = 4.0 + options.rate_coefficient * f.rate_per_hour[Move::connecting] +
                       0.3 * female - 0.2 * first_time + 0.1 * in_us + 0.02 * age -
                       0.0002 * age * age + 0.5 * sec[0] - 0.3 * sec[1] + u_g + row_noise(rng);
      std::vector<std::string> row = {f.session_id,          "",
                                      instructor,            format_double(female),
                                      format_double(first_time), format_double(in_us),
                                      format_double(age)};
      for (double v : sec) row.push_back(format_double(v));
      row.push_back(format_double(y));
      data.outcomes.add_row(std::move(row));
      data.features.push_back(std::move(f));
    }
  }
  return data;
}

}  // namespace talkmoves::synthetic
