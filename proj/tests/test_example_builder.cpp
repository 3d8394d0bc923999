#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "support/builders.hpp"
#include "talkmoves/errors.hpp"
#include "talkmoves/example_builder.hpp"
#include "talkmoves/text.hpp"

using namespace talkmoves;
using namespace talkmoves::testing;

namespace {
const WhitespaceTokenizer kTok;

std::vector<int> sizes(const std::vector<Segment>& segs) {
  std::vector<int> out;
  for (const auto& s : segs) out.push_back(static_cast<int>(split_whitespace(s.text).size()));
  return out;
}
}  // namespace

TEST(Segmentation, GreedyBoundaries) {
  EXPECT_EQ(sizes(segment_text(numbered_words(450), 200, kTok)), (std::vector<int>{200, 200, 50}));
  auto one = segment_text(numbered_words(200), 200, kTok);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].text, numbered_words(200));
  EXPECT_EQ(sizes(segment_text(numbered_words(201), 200, kTok)), (std::vector<int>{200, 1}));
}

TEST(Segmentation, IndicesAndCounts) {
  auto segs = segment_text(numbered_words(450), 200, kTok);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    EXPECT_EQ(segs[i].index, static_cast<int>(i));
    EXPECT_EQ(segs[i].count, 3);
  }
}

TEST(Segmentation, PrefersSentenceEndNearWindowEnd) {
  // A full stop at token 170 (inside the last 20% of a 200 window).
  std::vector<std::string> words = split_whitespace(numbered_words(260));
  words[169] += ".";
  auto segs = segment_text(join(words, " "), 200, kTok);
  EXPECT_EQ(sizes(segs), (std::vector<int>{170, 90}));
  // A full stop too early (token 100) is ignored.
  words = split_whitespace(numbered_words(260));
  words[99] += ".";
  EXPECT_EQ(sizes(segment_text(join(words, " "), 200, kTok)), (std::vector<int>{200, 60}));
}

TEST(Context, Boundaries) {
  Session s = make_session("s", {"i0", "s1", "i2", "s3", "s4", "i5"}, true);
  s.utterances[4].speaker_role = SpeakerRole::student;
  s.utterances[5].speaker_role = SpeakerRole::instructor;
  PreprocessConfig cfg;
  cfg.context_size = 2;
  EXPECT_FALSE(build_context(s, 0, cfg).has_value());
  EXPECT_EQ(build_context(s, 5, cfg).value(), "STUDENT: s3 STUDENT: s4");
  EXPECT_EQ(build_context(s, 2, cfg).value(), "INSTRUCTOR: i0 STUDENT: s1");
  cfg.context_size = 0;
  EXPECT_FALSE(build_context(s, 5, cfg).has_value());
  cfg.context_size = 2;
  EXPECT_THROW(build_context(s, 1, cfg), NotInstructorError);
}

TEST(Context, SegmentsShareOnePrior) {
  Session s = make_session("s", {"hello there", numbered_words(450)});
  PreprocessConfig cfg;
  cfg.context_size = 2;
  auto prior = build_context(s, 1, cfg);
  auto segs = segment_long_utterance(s.utterances[1], cfg.segment_token_limit, kTok);
  ASSERT_EQ(segs.size(), 3u);
  std::set<std::optional<std::string>> priors;
  for (const auto& seg : segs) priors.insert(assemble_example(seg, prior, cfg, kTok).prior_text);
  EXPECT_EQ(priors.size(), 1u);
}

TEST(Truncation, Windows) {
  std::vector<std::string> toks = split_whitespace(numbered_words(600));
  auto start = truncate_prior(toks, 412, TruncationSide::keep_start);
  ASSERT_EQ(start.size(), 412u);
  EXPECT_EQ(start.front(), "w0");
  EXPECT_EQ(start.back(), "w411");
  auto end = truncate_prior(toks, 412, TruncationSide::keep_end);
  ASSERT_EQ(end.size(), 412u);
  EXPECT_EQ(end.front(), "w188");
  EXPECT_EQ(end.back(), "w599");
  auto small = split_whitespace(numbered_words(100));
  EXPECT_EQ(truncate_prior(small, 412, TruncationSide::keep_start), small);
  EXPECT_EQ(truncate_prior(small, 412, TruncationSide::keep_end), small);
}

TEST(Assemble, Budget) {
  PreprocessConfig cfg;
  cfg.context_size = 2;
  Segment target{numbered_words(100, "t"), 0, 1};
  auto ex = assemble_example(target, numbered_words(600, "p"), cfg, kTok);
  ASSERT_TRUE(ex.prior_text);
  EXPECT_EQ(split_whitespace(*ex.prior_text).size(), 412u);
  ex = assemble_example(target, numbered_words(50, "p"), cfg, kTok);
  EXPECT_EQ(*ex.prior_text, numbered_words(50, "p"));
  Segment huge{numbered_words(600, "t"), 0, 1};
  EXPECT_THROW(assemble_example(huge, std::nullopt, cfg, kTok), TargetTooLongError);
}

TEST(Config, Validation) {
  PreprocessConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.context_size = 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = PreprocessConfig{};
  cfg.segment_token_limit = 512;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = PreprocessConfig{};
  cfg.balancing_factor = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Balance, Counts) {
  auto make = [](int neg, int pos) {
    std::vector<AnnotationExample> v;
    for (int i = 0; i < neg; ++i) v.push_back(labeled("n" + std::to_string(i), false, Move::connecting));
    for (int i = 0; i < pos; ++i) v.push_back(labeled("p" + std::to_string(i), true, Move::connecting));
    return v;
  };
  auto count_pos = [](const std::vector<AnnotationExample>& v) {
    return std::count_if(v.begin(), v.end(), [](const auto& e) { return e.gold->connecting; });
  };
  auto out = balance_labels(make(600, 40), Move::connecting, 6, 1);
  EXPECT_EQ(count_pos(out), 100);
  EXPECT_EQ(out.size(), 700u);
  auto in = make(600, 600);
  EXPECT_EQ(balance_labels(in, Move::connecting, 1, 1), in);
  out = balance_labels(make(500, 30), Move::connecting, 1, 9);
  EXPECT_EQ(count_pos(out), 500);
  EXPECT_EQ(static_cast<long>(out.size()) - count_pos(out), 500);
  EXPECT_THROW(balance_labels(make(10, 0), Move::connecting, 2, 1), NoPositivesError);
  EXPECT_EQ(balance_labels(make(600, 40), Move::connecting, 6, 5),
            balance_labels(make(600, 40), Move::connecting, 6, 5));
}

TEST(Sample, ExhaustiveAndDeterministic) {
  std::vector<Session> corpus;
  std::vector<std::string> turns;
  for (int i = 0; i < 20; ++i) turns.push_back("turn " + std::to_string(i));
  corpus.push_back(make_session("a", turns));
  SampleOptions opt;
  opt.count = 10;
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    opt.seed = seed;
    EXPECT_EQ(sample_examples(corpus, opt, kTok).size(), 10u);
  }
  opt.count = 11;
  EXPECT_THROW(sample_examples(corpus, opt, kTok), InsufficientDataError);

  std::vector<std::string> many;
  for (int i = 0; i < 200; ++i) many.push_back("t" + std::to_string(i));
  std::vector<Session> big = {make_session("b", many)};
  opt.count = 5;
  opt.seed = 42;
  EXPECT_EQ(sample_examples(big, opt, kTok), sample_examples(big, opt, kTok));
}

TEST(Sample, LongUtteranceAddsSegments) {
  std::vector<std::string> turns;
  for (int i = 0; i < 10; ++i) turns.push_back(i == 7 ? numbered_words(450) : "short turn");
  std::vector<Session> corpus = {make_session("c", turns)};
  SampleOptions opt;
  opt.count = 5;
  // Expected size from an independent count: one example per short turn,
  // ceil(450 / 200) for the long one.
  auto ex = sample_examples(corpus, opt, kTok);
  std::set<std::string> utts;
  for (const auto& e : ex) utts.insert(e.utterance_id);
  ASSERT_EQ(utts.size(), 5u);
  EXPECT_EQ(ex.size(), 5u + 2u);
}

TEST(Split, GroupsAndDeterminism) {
  std::vector<AnnotationExample> ex;
  for (int u = 0; u < 50; ++u) {
    const int segs = (u % 7 == 0) ? 3 : 1;
    for (int s = 0; s < segs; ++s) {
      AnnotationExample e;
      e.utterance_id = "u" + std::to_string(u);
      e.example_id = e.utterance_id + "#" + std::to_string(s);
      e.segment_index = s;
      e.segment_count = segs;
      ex.push_back(e);
    }
  }
  auto a = train_test_split(ex, 0.8, 3);
  auto b = train_test_split(ex, 0.8, 3);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  std::set<std::string> train_utts, test_utts;
  for (const auto& e : a.train) train_utts.insert(e.utterance_id);
  for (const auto& e : a.test) test_utts.insert(e.utterance_id);
  for (const auto& u : train_utts) EXPECT_FALSE(test_utts.count(u)) << u;
  EXPECT_EQ(a.train.size() + a.test.size(), ex.size());

  std::vector<AnnotationExample> flat;
  for (int i = 0; i < 100; ++i) {
    AnnotationExample e;
    e.utterance_id = "f" + std::to_string(i);
    e.example_id = e.utterance_id + "#0";
    flat.push_back(e);
  }
  auto f = train_test_split(flat, 0.8, 11);
  EXPECT_EQ(f.train.size(), 80u);
  EXPECT_EQ(f.test.size(), 20u);
}

TEST(ExamplesIo, RoundTrip) {
  AnnotationExample e = labeled("x", true, Move::probing);
  e.context = {"STUDENT: hi", "INSTRUCTOR: why?"};
  e.prior_text = "STUDENT: hi INSTRUCTOR: why?";
  e.labels_by_annotator["a1"] = *e.gold;
  std::stringstream ss;
  write_examples({e, labeled("y", false, Move::probing)}, ss);
  auto back = parse_examples(ss, "mem");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], e);
}
