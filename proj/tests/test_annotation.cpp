#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "talkmoves/annotation.hpp"
#include "talkmoves/errors.hpp"

using namespace talkmoves;

namespace {

AnnotationRecord rec(const std::string& ex, const std::string& ann, std::initializer_list<Move> moves) {
  AnnotationRecord r{ex, ann, {}};
  for (Move m : moves) r.labels.set(m, true);
  return r;
}

// Plain recursive Levenshtein distance on word vectors.
std::size_t edit_distance(const std::vector<std::string>& a, std::size_t i,
                          const std::vector<std::string>& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  if (a[i] == b[j]) return edit_distance(a, i + 1, b, j + 1);
  return 1 + std::min({edit_distance(a, i + 1, b, j), edit_distance(a, i, b, j + 1),
                       edit_distance(a, i + 1, b, j + 1)});
}

std::string words(std::mt19937& rng, int n) {
  static const char* vocab[] = {"a", "b", "c", "d"};
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += vocab[rng() % 4];
  }
  return s;
}

}  // namespace

TEST(Gold, UnionOfSelections) {
  LabelSet a, b;
  a.probing = true;
  b.revoicing = true;
  b.off_task = true;
  LabelSet u = union_gold(a, b);
  EXPECT_TRUE(u.probing);
  EXPECT_TRUE(u.revoicing);
  EXPECT_TRUE(u.off_task);
  EXPECT_FALSE(u.eliciting);
  EXPECT_EQ(union_gold(LabelSet{}, LabelSet{}), LabelSet{});
}

TEST(Agreement, PerAnnotatorAndMean) {
  // Annotator x pairs with y on e1..e4 and with z on e5..e6.
  std::vector<AnnotationRecord> r = {
      rec("e1", "x", {Move::probing}), rec("e1", "y", {Move::probing}),
      rec("e2", "x", {Move::probing}), rec("e2", "y", {}),
      rec("e3", "x", {}),              rec("e3", "y", {}),
      rec("e4", "x", {}),              rec("e4", "y", {Move::probing}),
      rec("e5", "x", {}),              rec("e5", "z", {}),
      rec("e6", "x", {Move::probing}), rec("e6", "z", {Move::probing}),
  };
  auto rep = pairwise_agreement(r, Move::probing);
  EXPECT_DOUBLE_EQ(rep.per_annotator.at("x"), 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(rep.per_annotator.at("y"), 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(rep.per_annotator.at("z"), 1.0);
  EXPECT_NEAR(rep.mean, (4.0 / 6.0 + 0.5 + 1.0) / 3.0, 1e-12);
}

TEST(Agreement, MissingPair) {
  std::vector<AnnotationRecord> r = {rec("e1", "x", {}), rec("e1", "y", {}), rec("e2", "x", {})};
  EXPECT_THROW(pairwise_agreement(r, Move::probing), MissingPairError);
  r.push_back(rec("e2", "y", {}));
  r.push_back(rec("e2", "z", {}));
  EXPECT_THROW(pairwise_agreement(r, Move::probing), MissingPairError);
}

TEST(Overlap, Rate) {
  std::vector<AnnotationRecord> r = {
      rec("e1", "x", {Move::probing, Move::eliciting}), rec("e1", "y", {Move::eliciting}),
      rec("e2", "x", {Move::probing}),                  rec("e2", "y", {Move::revoicing}),
      rec("e3", "x", {}),                               rec("e3", "y", {}),
      rec("e4", "x", {}),                               rec("e4", "y", {Move::connecting}),
  };
  EXPECT_DOUBLE_EQ(any_label_overlap_rate(r), 0.5);
}

TEST(Distribution, Shares) {
  std::vector<LabelSet> gold(4);
  gold[0].probing = true;
  gold[1].probing = true;
  gold[1].model_utterance = true;
  auto d = label_distribution(gold);
  EXPECT_DOUBLE_EQ(d.at(Move::probing), 0.5);
  EXPECT_DOUBLE_EQ(d.at(Move::model_utterance), 0.25);
  EXPECT_DOUBLE_EQ(d.at(Move::adding_on), 0.0);
  EXPECT_THROW(label_distribution({}), EmptyInputError);
}

TEST(Wer, KnownCases) {
  EXPECT_DOUBLE_EQ(word_error_rate("the cat sat", "the cat sat"), 0.0);
  EXPECT_DOUBLE_EQ(word_error_rate("The cat, sat.", "the cat sat"), 0.0);
  auto c = word_error_counts("a b c d", "a x c");
  EXPECT_EQ(c.errors(), 2u);
  EXPECT_EQ(c.substitutions + c.deletions, 2u);
  EXPECT_DOUBLE_EQ(word_error_rate("a b", "a b c d"), 1.0);
  EXPECT_THROW(word_error_rate("", "x"), EmptyReferenceError);
  EXPECT_THROW(word_error_rate(" ... ", "x"), EmptyReferenceError);
}

TEST(Wer, MatchesRecursiveOracle) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::string ref = words(rng, 1 + rng() % 7);
    std::string hyp = words(rng, rng() % 7);
    auto r = wer_normalize(ref);
    auto h = wer_normalize(hyp);
    const std::size_t d = edit_distance(r, 0, h, 0);
    auto c = word_error_counts(ref, hyp);
    ASSERT_EQ(c.errors(), d) << ref << " | " << hyp;
    EXPECT_EQ(c.reference_words, r.size());
    EXPECT_EQ(h.size(), r.size() - c.deletions + c.insertions);
    EXPECT_NEAR(word_error_rate(ref, hyp), static_cast<double>(d) / r.size(), 1e-15);
  }
}

TEST(Wer, CorpusPooled) {
  std::vector<std::pair<std::string, std::string>> pairs = {{"a b c d", "a b c d"}, {"a b", "x"}};
  EXPECT_DOUBLE_EQ(corpus_word_error_rate(pairs), 2.0 / 6.0);
}

TEST(Attach, UnionAndUnlabeled) {
  std::vector<AnnotationExample> ex(2);
  ex[0].example_id = "e1";
  ex[1].example_id = "e2";
  std::vector<AnnotationRecord> r = {rec("e1", "x", {Move::probing}),
                                     rec("e1", "y", {Move::revoicing}),
                                     rec("e2", "x", {Move::probing})};
  attach_labels(ex, r);
  ASSERT_TRUE(ex[0].gold);
  EXPECT_TRUE(ex[0].gold->probing);
  EXPECT_TRUE(ex[0].gold->revoicing);
  EXPECT_EQ(ex[0].labels_by_annotator.size(), 2u);
  EXPECT_FALSE(ex[1].gold);
}

TEST(AnnotationsCsv, RoundTripAndErrors) {
  std::vector<AnnotationRecord> r = {rec("e,1", "x", {Move::probing, Move::model_utterance}),
                                     rec("e2", "y", {})};
  r[1].labels.poor_transcription = true;
  std::stringstream ss;
  write_annotations(r, ss);
  auto back = parse_annotations(ss, "mem");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].example_id, "e,1");
  EXPECT_EQ(back[0].labels, r[0].labels);
  EXPECT_EQ(back[1].labels, r[1].labels);

  std::stringstream bad(
      "example_id,annotator_id,adding_on,connecting,eliciting,probing,revoicing,off_task,"
      "poor_transcription,model_utterance\ne1,x,0,0,2,0,0,0,0,0\n");
  EXPECT_THROW(parse_annotations(bad, "mem"), Error);
}
