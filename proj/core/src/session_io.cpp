#include <algorithm>
#include <fstream>
#include <ostream>

#include "json_util.hpp"
#include "talkmoves/corpus.hpp"
#include "talkmoves/errors.hpp"

namespace talkmoves {

using detail::ordered_json;
using detail::require;
using nlohmann::json;

namespace {

Utterance utterance_from_json(const json& j, const std::string& default_session) {
  Utterance u;
  u.utterance_id = require(j, "utterance_id").get<std::string>();
  u.session_id = j.value("session_id", default_session);
  u.speaker_role = parse_role(require(j, "speaker_role").get<std::string>());
  u.speaker_id = require(j, "speaker_id").get<std::string>();
  u.start_time = require(j, "start_time").get<double>();
  u.end_time = require(j, "end_time").get<double>();
  u.text = require(j, "text").get<std::string>();
  u.source = parse_source(j.value("source", std::string("audio")));
  return u;
}

Session header_from_json(const json& j) {
  Session s;
  s.session_id = require(j, "session_id").get<std::string>();
  s.instructor_id = require(j, "instructor_id").get<std::string>();
  if (j.contains("duration_hours") && !j.at("duration_hours").is_null()) {
    s.declared_duration_hours = j.at("duration_hours").get<double>();
  }
  if (j.contains("metadata")) {
    for (const auto& [key, value] : j.at("metadata").items()) {
      s.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
  return s;
}

ordered_json utterance_to_json(const Utterance& u) {
  ordered_json j;
  j["record"] = "utterance";
  j["utterance_id"] = u.utterance_id;
  j["session_id"] = u.session_id;
  j["speaker_role"] = role_name(u.speaker_role);
  j["speaker_id"] = u.speaker_id;
  j["start_time"] = u.start_time;
  j["end_time"] = u.end_time;
  j["text"] = u.text;
  j["source"] = source_name(u.source);
  return j;
}

}  // namespace

SessionRecords parse_session_records(std::istream& in, const std::string& source_name) {
  SessionRecords out;
  detail::for_each_json_line(in, source_name, [&](const json& j, std::size_t line) {
    if (!j.is_object()) throw ParseError(source_name, line, "record is not an object");
    const std::string kind = j.value("record", std::string("utterance"));
    try {
      if (kind == "session") {
        if (out.header) throw ParseError(source_name, line, "duplicate session header");
        out.header = header_from_json(j);
      } else if (kind == "utterance") {
        out.utterances.push_back(
            utterance_from_json(j, out.header ? out.header->session_id : std::string()));
      } else {
        throw ParseError(source_name, line, "unknown record type '" + kind + "'");
      }
    } catch (const ValidationError& e) {
      throw ValidationError(source_name + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

SessionRecords load_session_records(const std::filesystem::path& path) {
  auto in = detail::open_input(path.string());
  return parse_session_records(in, path.string());
}

Session parse_session(std::istream& in, const std::string& source_name) {
  SessionRecords records = parse_session_records(in, source_name);
  if (!records.header) {
    if (records.utterances.empty()) throw ValidationError(source_name + ": no utterances");
    throw ValidationError(source_name + ": missing session header record");
  }
  Session session = std::move(*records.header);
  session.utterances = std::move(records.utterances);
  validate_session(session);
  return session;
}

Session load_session(const std::filesystem::path& path) {
  auto in = detail::open_input(path.string());
  return parse_session(in, path.string());
}

void write_session(const Session& session, std::ostream& out) {
  ordered_json header;
  header["record"] = "session";
  header["session_id"] = session.session_id;
  header["instructor_id"] = session.instructor_id;
  if (session.declared_duration_hours) {
    header["duration_hours"] = *session.declared_duration_hours;
  }
  ordered_json metadata = ordered_json::object();
  for (const auto& [k, v] : session.metadata) metadata[k] = v;
  header["metadata"] = metadata;
  out << detail::dump_line(header) << '\n';
  for (const auto& u : session.utterances) out << detail::dump_line(utterance_to_json(u)) << '\n';
}

void save_session(const Session& session, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write " + path.string());
  write_session(session, out);
  if (!out) throw IOError("write failed for " + path.string());
}

std::vector<Utterance> load_chat_log(const std::filesystem::path& path) {
  SessionRecords records = load_session_records(path);
  for (auto& u : records.utterances) {
    if (records.header && u.session_id.empty()) u.session_id = records.header->session_id;
    u.source = Source::chat;
  }
  return std::move(records.utterances);
}

std::vector<RawSegment> load_raw_segments(const std::filesystem::path& path) {
  auto in = detail::open_input(path.string());
  std::vector<RawSegment> out;
  detail::for_each_json_line(in, path.string(), [&](const json& j, std::size_t line) {
    RawSegment s;
    s.start_time = require(j, "start_time").get<double>();
    s.end_time = require(j, "end_time").get<double>();
    s.text = require(j, "text").get<std::string>();
    if (!(s.end_time >= s.start_time)) {
      throw ValidationError(path.string() + ":" + std::to_string(line) +
                            ": end_time must be >= start_time");
    }
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<SpeakerInterval> load_speaker_intervals(const std::filesystem::path& path) {
  auto in = detail::open_input(path.string());
  std::vector<SpeakerInterval> out;
  detail::for_each_json_line(in, path.string(), [&](const json& j, std::size_t) {
    SpeakerInterval iv;
    iv.speaker_id = require(j, "speaker_id").get<std::string>();
    iv.role = parse_role(require(j, "role").get<std::string>());
    iv.start_time = require(j, "start_time").get<double>();
    iv.end_time = require(j, "end_time").get<double>();
    out.push_back(std::move(iv));
  });
  return out;
}

std::vector<Session> load_sessions(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IOError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::vector<Session> sessions;
  sessions.reserve(files.size());
  for (const auto& f : files) sessions.push_back(load_session(f));
  std::sort(sessions.begin(), sessions.end(),
            [](const Session& a, const Session& b) { return a.session_id < b.session_id; });
  return sessions;
}

}  // namespace talkmoves
