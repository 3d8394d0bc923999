#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "talkmoves/example_builder.hpp"
#include "talkmoves/labels.hpp"

namespace talkmoves {

struct AnnotationRecord {
  std::string example_id;
  std::string annotator_id;
  LabelSet labels;
};

// An example is positive for a label if either annotator selected it.
LabelSet union_gold(const LabelSet& a, const LabelSet& b);

struct AgreementReport {
  Move move = Move::adding_on;
  std::map<std::string, double> per_annotator;
  double mean = 0.0;  // unweighted over annotators
};

// Raw percent agreement of each annotator with their co-annotator on one
// move. Throws MissingPairError when an example lacks exactly two records.
AgreementReport pairwise_agreement(const std::vector<AnnotationRecord>& records, Move move);

// Share of examples where the two selections share a label. Two empty
// selections count as agreement.
double any_label_overlap_rate(const std::vector<AnnotationRecord>& records);

// Per-move share of examples carrying the move (talk moves + model utterance).
std::map<Move, double> label_distribution(const std::vector<LabelSet>& gold);

struct WerCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference_words = 0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
  double rate() const;
};

// Lowercase, drop ASCII punctuation, split on whitespace.
std::vector<std::string> wer_normalize(std::string_view text);

WerCounts word_error_counts(std::string_view reference, std::string_view hypothesis);
// Throws EmptyReferenceError.
double word_error_rate(std::string_view reference, std::string_view hypothesis);

// Total edits over total reference words across pairs.
double corpus_word_error_rate(const std::vector<std::pair<std::string, std::string>>& pairs);

// Groups records per example and attaches labels_by_annotator plus the union
// gold. Examples without exactly two records are left unlabeled.
void attach_labels(std::vector<AnnotationExample>& examples,
                   const std::vector<AnnotationRecord>& records);

// CSV: example_id,annotator_id,adding_on,connecting,eliciting,probing,
// revoicing,off_task,poor_transcription,model_utterance (0/1 cells).
std::vector<AnnotationRecord> parse_annotations(std::istream& in, const std::string& source_name);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
void write_annotations(const std::vector<AnnotationRecord>& records, std::ostream& out);
void save_annotations(const std::vector<AnnotationRecord>& records,
                      const std::filesystem::path& path);

}  // namespace talkmoves
