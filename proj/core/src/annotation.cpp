#include "talkmoves/annotation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "talkmoves/csv.hpp"
#include "talkmoves/errors.hpp"
#include "talkmoves/text.hpp"

namespace talkmoves {

LabelSet union_gold(const LabelSet& a, const LabelSet& b) {
  LabelSet out;
  for (std::size_t i = 0; i < kLabelColumns.size(); ++i) {
    set_label_flag(out, i, label_flag(a, i) || label_flag(b, i));
  }
  return out;
}

namespace {

using Pair = std::pair<const AnnotationRecord*, const AnnotationRecord*>;

// Records grouped by example, each group checked to be a pair of distinct
// annotators. Ordered by example id.
std::vector<Pair> annotation_pairs(const std::vector<AnnotationRecord>& records) {
  std::map<std::string, std::vector<const AnnotationRecord*>> by_example;
  for (const auto& r : records) by_example[r.example_id].push_back(&r);
  std::vector<Pair> pairs;
  pairs.reserve(by_example.size());
  for (const auto& [id, group] : by_example) {
    if (group.size() != 2) {
      throw MissingPairError("example '" + id + "' has " + std::to_string(group.size()) +
                             " annotation records, expected 2");
    }
    if (group[0]->annotator_id == group[1]->annotator_id) {
      throw ValidationError("example '" + id + "' annotated twice by '" + group[0]->annotator_id +
                            "'");
    }
    pairs.emplace_back(group[0], group[1]);
  }
  return pairs;
}

}  // namespace

AgreementReport pairwise_agreement(const std::vector<AnnotationRecord>& records, Move move) {
  auto pairs = annotation_pairs(records);
  if (pairs.empty()) throw EmptyInputError("no annotation records");
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // agreed, total
  for (const auto& [a, b] : pairs) {
    const bool agree = a->labels.get(move) == b->labels.get(move);
    for (const AnnotationRecord* r : {a, b}) {
      auto& t = tally[r->annotator_id];
      t.first += agree ? 1 : 0;
      t.second += 1;
    }
  }
  AgreementReport report;
  report.move = move;
  double sum = 0.0;
  for (const auto& [annotator, t] : tally) {
    double rate = static_cast<double>(t.first) / static_cast<double>(t.second);
    report.per_annotator[annotator] = rate;
    sum += rate;
  }
  report.mean = sum / static_cast<double>(tally.size());
  return report;
}

double any_label_overlap_rate(const std::vector<AnnotationRecord>& records) {
  auto pairs = annotation_pairs(records);
  if (pairs.empty()) throw EmptyInputError("no annotation records");
  std::size_t overlap = 0;
  for (const auto& [a, b] : pairs) {
    if (a->labels.intersects(b->labels) || (a->labels.empty() && b->labels.empty())) ++overlap;
  }
  return static_cast<double>(overlap) / static_cast<double>(pairs.size());
}

std::map<Move, double> label_distribution(const std::vector<LabelSet>& gold) {
  if (gold.empty()) throw EmptyInputError("label distribution of an empty list");
  std::map<Move, double> out;
  for (Move m : kAllMoves) {
    std::size_t n = 0;
    for (const auto& g : gold) n += g.get(m) ? 1 : 0;
    out[m] = static_cast<double>(n) / static_cast<double>(gold.size());
  }
  return out;
}

double WerCounts::rate() const {
  if (reference_words == 0) throw EmptyReferenceError("reference has no words");
  return static_cast<double>(errors()) / static_cast<double>(reference_words);
}

std::vector<std::string> wer_normalize(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (unsigned char c : text) {
    if (c < 0x80 && std::ispunct(c)) continue;
    cleaned.push_back(static_cast<char>(c));
  }
  return split_whitespace(to_lower_ascii(cleaned));
}

WerCounts word_error_counts(std::string_view reference, std::string_view hypothesis) {
  const auto ref = wer_normalize(reference);
  const auto hyp = wer_normalize(hypothesis);

  struct Cell {
    std::size_t cost = 0, sub = 0, ins = 0, del = 0;
  };
  // Row-by-row Levenshtein keeping the edit breakdown of one optimal path.
  std::vector<Cell> prev(hyp.size() + 1), cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = {j, 0, j, 0};
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = {i, 0, 0, i};
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      Cell diag = prev[j - 1];
      if (ref[i - 1] != hyp[j - 1]) {
        ++diag.cost;
        ++diag.sub;
      }
      Cell del = prev[j];
      ++del.cost;
      ++del.del;
      Cell ins = cur[j - 1];
      ++ins.cost;
      ++ins.ins;
      Cell best = diag;
      if (del.cost < best.cost) best = del;
      if (ins.cost < best.cost) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  const Cell& end = prev[hyp.size()];
  WerCounts counts;
  counts.substitutions = end.sub;
  counts.insertions = end.ins;
  counts.deletions = end.del;
  counts.reference_words = ref.size();
  return counts;
}

double word_error_rate(std::string_view reference, std::string_view hypothesis) {
  return word_error_counts(reference, hypothesis).rate();
}

double corpus_word_error_rate(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::size_t errors = 0, words = 0;
  for (const auto& [ref, hyp] : pairs) {
    auto c = word_error_counts(ref, hyp);
    errors += c.errors();
    words += c.reference_words;
  }
  if (words == 0) throw EmptyReferenceError("references contain no words");
  return static_cast<double>(errors) / static_cast<double>(words);
}

void attach_labels(std::vector<AnnotationExample>& examples,
                   const std::vector<AnnotationRecord>& records) {
  std::map<std::string, std::vector<const AnnotationRecord*>> by_example;
  for (const auto& r : records) by_example[r.example_id].push_back(&r);
  for (auto& ex : examples) {
    ex.labels_by_annotator.clear();
    ex.gold.reset();
    auto it = by_example.find(ex.example_id);
    if (it == by_example.end()) continue;
    for (const auto* r : it->second) ex.labels_by_annotator[r->annotator_id] = r->labels;
    if (it->second.size() == 2 && ex.labels_by_annotator.size() == 2) {
      ex.gold = union_gold(it->second[0]->labels, it->second[1]->labels);
    }
  }
}

std::vector<AnnotationRecord> parse_annotations(std::istream& in, const std::string& source_name) {
  CsvTable table = CsvTable::parse(in, source_name);
  const std::size_t id_col = table.require_column("example_id");
  const std::size_t annotator_col = table.require_column("annotator_id");
  std::array<std::size_t, kLabelColumns.size()> label_cols{};
  for (std::size_t i = 0; i < kLabelColumns.size(); ++i) {
    label_cols[i] = table.require_column(kLabelColumns[i]);
  }
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<AnnotationRecord> out;
  out.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& row = table.rows()[r];
    const std::size_t line = r + 2;
    AnnotationRecord rec;
    rec.example_id = row[id_col];
    rec.annotator_id = row[annotator_col];
    if (rec.example_id.empty() || rec.annotator_id.empty()) {
      throw ParseError(source_name, line, "example_id and annotator_id are required");
    }
    for (std::size_t i = 0; i < kLabelColumns.size(); ++i) {
      const std::string& cell = row[label_cols[i]];
      if (cell != "0" && cell != "1") {
        throw ParseError(source_name, line,
                         "column '" + std::string(kLabelColumns[i]) + "' must be 0 or 1");
      }
      set_label_flag(rec.labels, i, cell == "1");
    }
    if (!seen.emplace(rec.example_id, rec.annotator_id).second) {
      throw ValidationError(source_name + ":" + std::to_string(line) + ": duplicate record for (" +
                            rec.example_id + ", " + rec.annotator_id + ")");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  return parse_annotations(in, path.string());
}

void write_annotations(const std::vector<AnnotationRecord>& records, std::ostream& out) {
  std::vector<std::string> header = {"example_id", "annotator_id"};
  for (auto c : kLabelColumns) header.emplace_back(c);
  CsvTable table(header);
  for (const auto& r : records) {
    std::vector<std::string> row = {r.example_id, r.annotator_id};
    for (std::size_t i = 0; i < kLabelColumns.size(); ++i) {
      row.push_back(label_flag(r.labels, i) ? "1" : "0");
    }
    table.add_row(std::move(row));
  }
  table.write(out);
}

void save_annotations(const std::vector<AnnotationRecord>& records,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write " + path.string());
  write_annotations(records, out);
}

}  // namespace talkmoves
