#include "talkmoves/corpus.hpp"

#include <algorithm>
#include <unordered_set>

#include "talkmoves/errors.hpp"
#include "talkmoves/text.hpp"

namespace talkmoves {

std::string_view role_name(SpeakerRole role) {
  return role == SpeakerRole::instructor ? "instructor" : "student";
}

std::string_view source_name(Source source) { return source == Source::audio ? "audio" : "chat"; }

SpeakerRole parse_role(std::string_view name) {
  if (name == "instructor") return SpeakerRole::instructor;
  if (name == "student") return SpeakerRole::student;
  throw ValidationError("speaker_role must be 'instructor' or 'student', got '" +
                        std::string(name) + "'");
}

Source parse_source(std::string_view name) {
  if (name == "audio") return Source::audio;
  if (name == "chat") return Source::chat;
  throw ValidationError("source must be 'audio' or 'chat', got '" + std::string(name) + "'");
}

namespace {

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

bool session_order(const Utterance& a, const Utterance& b) {
  if (a.start_time != b.start_time) return a.start_time < b.start_time;
  return a.source == Source::audio && b.source == Source::chat;
}

}  // namespace

std::vector<Utterance> assign_speakers(const std::vector<RawSegment>& segments,
                                       const std::vector<SpeakerInterval>& intervals,
                                       const std::string& session_id) {
  for (const auto& iv : intervals) {
    if (!(iv.end_time > iv.start_time)) {
      throw ValidationError("speaker interval for '" + iv.speaker_id +
                            "' is degenerate (end_time <= start_time)");
    }
  }
  // Earlier start wins ties, independent of input order.
  std::vector<std::size_t> order(intervals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return intervals[a].start_time < intervals[b].start_time;
  });

  std::vector<Utterance> out;
  out.reserve(segments.size());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const RawSegment& seg = segments[s];
    const SpeakerInterval* best = nullptr;
    double best_overlap = 0.0;
    for (std::size_t idx : order) {
      const auto& iv = intervals[idx];
      double o = overlap(seg.start_time, seg.end_time, iv.start_time, iv.end_time);
      if (o > best_overlap) {
        best_overlap = o;
        best = &iv;
      }
    }
    Utterance u;
    u.utterance_id = session_id + "-u" + std::to_string(s);
    u.session_id = session_id;
    u.start_time = seg.start_time;
    u.end_time = seg.end_time;
    u.text = normalize_text(seg.text);
    u.source = Source::audio;
    if (best) {
      u.speaker_id = best->speaker_id;
      u.speaker_role = best->role;
    } else {
      u.speaker_id = std::string(kUnknownSpeaker);
      u.speaker_role = SpeakerRole::student;
    }
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Utterance> merge_chat(const std::vector<Utterance>& audio_utterances,
                                  const std::vector<Utterance>& chat_messages) {
  const std::string* session = nullptr;
  auto check = [&session](const Utterance& u) {
    if (!session) {
      session = &u.session_id;
    } else if (u.session_id != *session) {
      throw SessionMismatchError("utterance '" + u.utterance_id + "' belongs to session '" +
                                 u.session_id + "', expected '" + *session + "'");
    }
  };
  for (const auto& u : audio_utterances) check(u);
  for (const auto& u : chat_messages) check(u);

  std::vector<Utterance> merged;
  merged.reserve(audio_utterances.size() + chat_messages.size());
  merged.insert(merged.end(), audio_utterances.begin(), audio_utterances.end());
  merged.insert(merged.end(), chat_messages.begin(), chat_messages.end());
  sort_utterances(merged);
  return merged;
}

void sort_utterances(std::vector<Utterance>& utterances) {
  std::stable_sort(utterances.begin(), utterances.end(), session_order);
}

double session_duration_hours(const Session& session) {
  if (session.declared_duration_hours) {
    double d = *session.declared_duration_hours;
    if (!(d > 0.0)) {
      throw ZeroDurationError("session '" + session.session_id + "' declares a non-positive duration");
    }
    return d;
  }
  if (session.utterances.empty()) {
    throw ZeroDurationError("session '" + session.session_id + "' has no utterances");
  }
  double lo = session.utterances.front().start_time;
  double hi = session.utterances.front().end_time;
  for (const auto& u : session.utterances) {
    lo = std::min(lo, u.start_time);
    hi = std::max(hi, u.end_time);
  }
  double hours = (hi - lo) / 3600.0;
  if (!(hours > 0.0)) {
    throw ZeroDurationError("session '" + session.session_id + "' spans zero time");
  }
  return hours;
}

void validate_session(Session& session) {
  const std::string where = "session '" + session.session_id + "'";
  if (session.session_id.empty()) throw ValidationError("session_id is empty");
  if (session.instructor_id.empty()) throw ValidationError(where + ": instructor_id is empty");
  if (session.utterances.empty()) throw ValidationError(where + ": no utterances");

  std::unordered_set<std::string> ids;
  double max_end = 0.0;
  for (auto& u : session.utterances) {
    const std::string rec = where + ", utterance '" + u.utterance_id + "'";
    if (u.utterance_id.empty()) throw ValidationError(where + ": utterance_id is empty");
    if (!ids.insert(u.utterance_id).second) {
      throw ValidationError(rec + ": utterance_id is not unique");
    }
    if (u.session_id != session.session_id) {
      throw ValidationError(rec + ": session_id '" + u.session_id + "' does not match");
    }
    if (!(u.start_time >= 0.0)) throw ValidationError(rec + ": start_time must be >= 0");
    if (!(u.end_time >= u.start_time)) {
      throw ValidationError(rec + ": end_time must be >= start_time");
    }
    u.text = normalize_text(u.text);
    if (u.text.empty()) throw ValidationError(rec + ": text is empty");
    if (u.speaker_role == SpeakerRole::instructor && u.speaker_id != session.instructor_id) {
      throw ValidationError(rec + ": instructor speaker_id '" + u.speaker_id +
                            "' differs from instructor_id '" + session.instructor_id + "'");
    }
    max_end = std::max(max_end, u.end_time);
  }
  if (session.declared_duration_hours) {
    double d = *session.declared_duration_hours;
    if (!(d > 0.0)) throw ValidationError(where + ": duration_hours must be > 0");
    if (d < max_end / 3600.0) {
      throw ValidationError(where + ": duration_hours is shorter than the last utterance");
    }
  }
  sort_utterances(session.utterances);
}

}  // namespace talkmoves
