#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace talkmoves {

enum class SpeakerRole { instructor, student };
enum class Source { audio, chat };

std::string_view role_name(SpeakerRole role);
std::string_view source_name(Source source);
SpeakerRole parse_role(std::string_view name);
Source parse_source(std::string_view name);

// One diarized, timestamped turn. Times are seconds from session start.
struct Utterance {
  std::string utterance_id;
  std::string session_id;
  SpeakerRole speaker_role = SpeakerRole::student;
  std::string speaker_id;
  double start_time = 0.0;
  double end_time = 0.0;
  std::string text;
  Source source = Source::audio;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Session {
  std::string session_id;
  std::string instructor_id;
  std::vector<Utterance> utterances;
  // Declared length in hours, when the recording metadata provides it.
  std::optional<double> declared_duration_hours;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const Session&, const Session&) = default;
};

// Undiarized transcript piece.
struct RawSegment {
  double start_time = 0.0;
  double end_time = 0.0;
  std::string text;
};

struct SpeakerInterval {
  std::string speaker_id;
  SpeakerRole role = SpeakerRole::student;
  double start_time = 0.0;
  double end_time = 0.0;
};

inline constexpr std::string_view kUnknownSpeaker = "unknown";

// Each segment goes to the interval with the largest temporal overlap; ties
// go to the interval that starts first. Segments without any overlap are
// attributed to an "unknown" student. Utterance ids are
// "<session_id>-u<index>".
std::vector<Utterance> assign_speakers(const std::vector<RawSegment>& segments,
                                       const std::vector<SpeakerInterval>& intervals,
                                       const std::string& session_id);

// Stable merge ordered by start time; audio precedes chat on equal times.
std::vector<Utterance> merge_chat(const std::vector<Utterance>& audio_utterances,
                                  const std::vector<Utterance>& chat_messages);

// Sorts utterances into session order (start time, then audio before chat,
// then input order).
void sort_utterances(std::vector<Utterance>& utterances);

// Declared duration if present, otherwise the span of the utterances.
// Throws ZeroDurationError when the result is not positive.
double session_duration_hours(const Session& session);

// Normalizes all text fields and checks every Session / Utterance invariant.
// Throws ValidationError naming the offending record and field.
void validate_session(Session& session);

// Line-delimited JSON: a header record followed by one utterance per line.
//   {"record":"session","session_id":...,"instructor_id":...,
//    "duration_hours":...,"metadata":{...}}
//   {"record":"utterance","utterance_id":...,"session_id":...,
//    "speaker_role":"instructor","speaker_id":...,"start_time":...,
//    "end_time":...,"text":...,"source":"audio"}
// Throws ParseError (with line number) or ValidationError.
Session load_session(const std::filesystem::path& path);
Session parse_session(std::istream& in, const std::string& source_name);
void save_session(const Session& session, const std::filesystem::path& path);
void write_session(const Session& session, std::ostream& out);

// Header-optional reader used for chat logs and raw ingest inputs. Returns
// the header (if any) and unvalidated utterances.
struct SessionRecords {
  std::optional<Session> header;
  std::vector<Utterance> utterances;
};
SessionRecords parse_session_records(std::istream& in, const std::string& source_name);
SessionRecords load_session_records(const std::filesystem::path& path);

std::vector<Utterance> load_chat_log(const std::filesystem::path& path);

// {"start_time":..,"end_time":..,"text":..} per line.
std::vector<RawSegment> load_raw_segments(const std::filesystem::path& path);
// {"speaker_id":..,"role":..,"start_time":..,"end_time":..} per line.
std::vector<SpeakerInterval> load_speaker_intervals(const std::filesystem::path& path);

// Session files (*.jsonl) in a directory, sorted by session id.
std::vector<Session> load_sessions(const std::filesystem::path& dir);

}  // namespace talkmoves
