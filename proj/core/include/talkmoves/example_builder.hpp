#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "talkmoves/corpus.hpp"
#include "talkmoves/labels.hpp"
#include "talkmoves/tokenizer.hpp"

namespace talkmoves {

enum class TruncationSide { keep_start, keep_end };

std::string_view truncation_name(TruncationSide side);
TruncationSide parse_truncation(std::string_view name);

// Most prior turns an example can carry.
inline constexpr int kMaxContextSize = 2;

struct PreprocessConfig {
  int context_size = 0;  // 0 or 2 prior utterances
  TruncationSide truncation_side = TruncationSide::keep_end;
  std::optional<int> balancing_factor;
  int total_token_limit = 512;
  int segment_token_limit = 200;

  // Throws ValidationError.
  void validate() const;

  friend bool operator==(const PreprocessConfig&, const PreprocessConfig&) = default;
};

struct Segment {
  std::string text;
  int index = 0;
  int count = 1;
};

// One annotated (or annotatable) instructor utterance or segment of one.
struct AnnotationExample {
  std::string example_id;    // "<utterance_id>#<segment_index>"
  std::string session_id;
  std::string utterance_id;  // source utterance; split grouping key
  std::string target_text;
  int segment_index = 0;
  int segment_count = 1;
  // Up to kMaxContextSize tagged prior turns, oldest first. Kept untruncated
  // so every per-move preprocessing profile can be replayed from the file.
  std::vector<std::string> context;
  std::optional<std::string> prior_text;
  std::map<std::string, LabelSet> labels_by_annotator;
  std::optional<LabelSet> gold;

  friend bool operator==(const AnnotationExample&, const AnnotationExample&) = default;
};

// Greedy cuts of at most `limit` tokens. When a sentence-final token falls in
// the last 20% of a window the cut is placed right after the latest one.
std::vector<Segment> segment_long_utterance(const Utterance& utterance, int limit,
                                            const Tokenizer& tokenizer);
std::vector<Segment> segment_text(std::string_view text, int limit, const Tokenizer& tokenizer);

// "INSTRUCTOR: ..." / "STUDENT: ..." for up to `count` turns preceding
// `target_index`, oldest first.
std::vector<std::string> context_turns(const Session& session, std::size_t target_index,
                                       int count);

// Throws NotInstructorError when the target is not an instructor turn.
std::optional<std::string> build_context(const Session& session, std::size_t target_index,
                                         const PreprocessConfig& config);

std::vector<std::string> truncate_prior(std::vector<std::string> prior_tokens,
                                        std::size_t budget, TruncationSide side);

// Prior text is trimmed to total_token_limit - tokens(target). Throws
// TargetTooLongError when the target alone is over the limit.
AnnotationExample assemble_example(const Segment& target,
                                   const std::optional<std::string>& prior,
                                   const PreprocessConfig& config, const Tokenizer& tokenizer);

// Re-materializes prior_text of a stored example under another profile.
AnnotationExample prepare_example(const AnnotationExample& example,
                                  const PreprocessConfig& config, const Tokenizer& tokenizer);

// Appends copies of positives (drawn with replacement) until the positive
// count reaches ceil(negatives / factor). Examples must carry gold labels.
std::vector<AnnotationExample> balance_labels(const std::vector<AnnotationExample>& examples,
                                              Move move, int factor, std::uint64_t seed);

struct SampleOptions {
  std::size_t count = 2000;
  std::uint64_t seed = 0;
  PreprocessConfig preprocess;
};

// Uniform sample of instructor utterances without replacement, each then
// segmented; a sample of n utterances can yield more than n examples.
std::vector<AnnotationExample> sample_examples(const std::vector<Session>& corpus,
                                               const SampleOptions& options,
                                               const Tokenizer& tokenizer);

// Every segment of every instructor utterance, in corpus order.
std::vector<AnnotationExample> all_examples(const std::vector<Session>& corpus,
                                            const PreprocessConfig& preprocess,
                                            const Tokenizer& tokenizer);

struct TrainTestSplit {
  std::vector<AnnotationExample> train;
  std::vector<AnnotationExample> test;
};

// Groups share a side; input order is kept within each side.
TrainTestSplit train_test_split(const std::vector<AnnotationExample>& examples, double ratio,
                                std::uint64_t seed);

// Line-delimited JSON, one AnnotationExample per line.
std::vector<AnnotationExample> parse_examples(std::istream& in, const std::string& source_name);
std::vector<AnnotationExample> load_examples(const std::filesystem::path& path);
void write_examples(const std::vector<AnnotationExample>& examples, std::ostream& out);
void save_examples(const std::vector<AnnotationExample>& examples,
                   const std::filesystem::path& path);

}  // namespace talkmoves
