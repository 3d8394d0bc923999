#include <gtest/gtest.h>

#include <sstream>

#include "support/temp_dir.hpp"
#include "talkmoves/corpus.hpp"
#include "talkmoves/errors.hpp"

using namespace talkmoves;
using talkmoves::testing::TempDir;
using talkmoves::testing::write_file;

namespace {

Utterance utt(std::string id, double start, double end, Source src = Source::audio,
              SpeakerRole role = SpeakerRole::student, std::string speaker = "st1") {
  Utterance u;
  u.utterance_id = std::move(id);
  u.session_id = "s1";
  u.start_time = start;
  u.end_time = end;
  u.source = src;
  u.speaker_role = role;
  u.speaker_id = std::move(speaker);
  u.text = "text of " + u.utterance_id;
  return u;
}

Session small_session() {
  Session s;
  s.session_id = "s1";
  s.instructor_id = "inst";
  s.utterances = {utt("u0", 0, 2, Source::audio, SpeakerRole::instructor, "inst"),
                  utt("u1", 3, 5), utt("c0", 4, 4, Source::chat)};
  return s;
}

}  // namespace

TEST(AssignSpeakers, TieGoesToEarlierInterval) {
  std::vector<SpeakerInterval> iv = {{"B", SpeakerRole::student, 3, 10},
                                     {"A", SpeakerRole::instructor, 0, 3}};
  auto out = assign_speakers({{2, 4, "hi"}}, iv, "s1");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].speaker_id, "A");
  EXPECT_EQ(out[0].speaker_role, SpeakerRole::instructor);
}

TEST(AssignSpeakers, ContainmentAndFallback) {
  std::vector<SpeakerInterval> iv = {{"A", SpeakerRole::instructor, 0, 10},
                                     {"B", SpeakerRole::student, 20, 40}};
  auto out = assign_speakers({{0, 3, "a"}, {50, 51, "late"}, {25, 30, "b"}}, iv, "s9");
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].speaker_id, "A");
  EXPECT_EQ(out[1].speaker_id, std::string(kUnknownSpeaker));
  EXPECT_EQ(out[1].speaker_role, SpeakerRole::student);
  EXPECT_EQ(out[2].speaker_id, "B");
  EXPECT_EQ(out[0].utterance_id, "s9-u0");
  EXPECT_EQ(out[2].utterance_id, "s9-u2");
}

TEST(AssignSpeakers, RejectsDegenerateInterval) {
  EXPECT_THROW(assign_speakers({{0, 1, "x"}}, {{"A", SpeakerRole::student, 5, 5}}, "s"),
               ValidationError);
}

TEST(AssignSpeakers, IndependentOfIntervalOrder) {
  std::vector<SpeakerInterval> iv = {{"A", SpeakerRole::instructor, 0, 3},
                                     {"B", SpeakerRole::student, 3, 10},
                                     {"C", SpeakerRole::student, 1, 2}};
  std::vector<RawSegment> segs = {{2, 4, "x"}, {0.5, 2.5, "y"}, {6, 9, "z"}};
  auto a = assign_speakers(segs, iv, "s");
  std::reverse(iv.begin(), iv.end());
  auto b = assign_speakers(segs, iv, "s");
  EXPECT_EQ(a, b);
}

TEST(MergeChat, OrdersByTimeWithAudioFirstOnTies) {
  auto out = merge_chat({utt("a", 5, 6)}, {utt("c", 3, 3, Source::chat)});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].utterance_id, "c");
  out = merge_chat({utt("a", 5, 6)}, {utt("c", 5, 5, Source::chat)});
  EXPECT_EQ(out[0].utterance_id, "a");
  EXPECT_EQ(out[1].source, Source::chat);
  auto audio = std::vector<Utterance>{utt("a", 1, 2), utt("b", 3, 4)};
  EXPECT_EQ(merge_chat(audio, {}), audio);
}

TEST(MergeChat, StableForEqualTimesSameSource) {
  auto out = merge_chat({}, {utt("c2", 5, 5, Source::chat), utt("c1", 5, 5, Source::chat)});
  EXPECT_EQ(out[0].utterance_id, "c2");
  EXPECT_EQ(out[1].utterance_id, "c1");
}

TEST(MergeChat, SessionMismatch) {
  auto other = utt("x", 1, 1, Source::chat);
  other.session_id = "s2";
  EXPECT_THROW(merge_chat({utt("a", 0, 1)}, {other}), SessionMismatchError);
}

TEST(Duration, DeclaredSpanAndZero) {
  Session s = small_session();
  s.declared_duration_hours = 1.0;
  EXPECT_DOUBLE_EQ(session_duration_hours(s), 1.0);
  s.declared_duration_hours.reset();
  s.utterances = {utt("a", 0, 100), utt("b", 5000, 5400)};
  EXPECT_DOUBLE_EQ(session_duration_hours(s), 1.5);
  s.utterances = {utt("a", 7, 7)};
  EXPECT_THROW(session_duration_hours(s), ZeroDurationError);
}

TEST(ValidateSession, RejectsBadRecords) {
  Session s = small_session();
  s.utterances[1].end_time = 1;
  EXPECT_THROW(validate_session(s), ValidationError);

  s = small_session();
  s.utterances[1].utterance_id = "u0";
  EXPECT_THROW(validate_session(s), ValidationError);

  s = small_session();
  s.utterances[0].speaker_id = "someone-else";
  EXPECT_THROW(validate_session(s), ValidationError);

  s = small_session();
  s.declared_duration_hours = 0.0001;  // shorter than the last utterance
  EXPECT_THROW(validate_session(s), ValidationError);

  s = small_session();
  s.utterances.clear();
  try {
    validate_session(s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no utterances"), std::string::npos);
  }
}

TEST(SessionIo, LoadSortsAndValidates) {
  TempDir dir("corpus");
  write_file(dir / "s.jsonl",
             R"({"record":"session","session_id":"s1","instructor_id":"inst"})"
             "\n"
             R"({"utterance_id":"u2","session_id":"s1","speaker_role":"student","speaker_id":"a","start_time":9,"end_time":10,"text":"late","source":"audio"})"
             "\n"
             R"({"utterance_id":"u0","session_id":"s1","speaker_role":"instructor","speaker_id":"inst","start_time":0,"end_time":2,"text":"  first   turn ","source":"audio"})"
             "\n"
             R"({"utterance_id":"u1","session_id":"s1","speaker_role":"student","speaker_id":"a","start_time":4,"end_time":4,"text":"chat","source":"chat"})"
             "\n");
  Session s = load_session(dir / "s.jsonl");
  ASSERT_EQ(s.utterances.size(), 3u);
  EXPECT_EQ(s.utterances[0].utterance_id, "u0");
  EXPECT_EQ(s.utterances[0].text, "first turn");
  EXPECT_EQ(s.utterances[2].utterance_id, "u2");
}

TEST(SessionIo, ErrorsCarryLineNumbers) {
  std::istringstream bad(R"({"record":"session","session_id":"s1","instructor_id":"i"})"
                         "\n{not json}\n");
  try {
    parse_session(bad, "bad.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream inverted(
      R"({"record":"session","session_id":"s1","instructor_id":"i"})"
      "\n"
      R"({"utterance_id":"u0","session_id":"s1","speaker_role":"student","speaker_id":"a","start_time":5,"end_time":1,"text":"x","source":"audio"})"
      "\n");
  try {
    parse_session(inverted, "inv.jsonl");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("u0"), std::string::npos);
  }
  std::istringstream empty("");
  EXPECT_THROW(parse_session(empty, "empty.jsonl"), ValidationError);
}

TEST(SessionIo, SaveLoadRoundTrip) {
  TempDir dir("roundtrip");
  Session s = small_session();
  s.declared_duration_hours = 0.75;
  s.metadata["course"] = "cip";
  s.metadata["note"] = "unicode \xc3\xa9 and \"quotes\"";
  s.utterances[1].text = "tabs\tand  spaces collapse";
  validate_session(s);
  save_session(s, dir / "s1.jsonl");
  EXPECT_EQ(load_session(dir / "s1.jsonl"), s);
}

TEST(SessionIo, LoadSessionsSortedById) {
  TempDir dir("many");
  for (std::string id : {"b", "a", "c"}) {
    Session s = small_session();
    s.session_id = id;
    for (auto& u : s.utterances) u.session_id = id;
    validate_session(s);
    save_session(s, dir / (id + ".jsonl"));
  }
  auto all = load_sessions(dir.path());
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].session_id, "a");
  EXPECT_EQ(all[2].session_id, "c");
}
