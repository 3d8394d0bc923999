#include <fstream>
#include <ostream>

#include "json_util.hpp"
#include "talkmoves/example_builder.hpp"

namespace talkmoves {

using detail::ordered_json;
using detail::require;
using nlohmann::json;

namespace {

ordered_json labels_to_json(const LabelSet& labels) {
  ordered_json j;
  for (std::size_t i = 0; i < kLabelColumns.size(); ++i) {
    j[std::string(kLabelColumns[i])] = label_flag(labels, i);
  }
  return j;
}

LabelSet labels_from_json(const json& j) {
  LabelSet labels;
  for (std::size_t i = 0; i < kLabelColumns.size(); ++i) {
    const std::string key(kLabelColumns[i]);
    set_label_flag(labels, i, j.contains(key) && j.at(key).get<bool>());
  }
  return labels;
}

}  // namespace

void write_examples(const std::vector<AnnotationExample>& examples, std::ostream& out) {
  for (const auto& ex : examples) {
    ordered_json j;
    j["example_id"] = ex.example_id;
    j["session_id"] = ex.session_id;
    j["utterance_id"] = ex.utterance_id;
    j["target_text"] = ex.target_text;
    j["segment_index"] = ex.segment_index;
    j["segment_count"] = ex.segment_count;
    j["context"] = ex.context;
    j["prior_text"] = ex.prior_text ? ordered_json(*ex.prior_text) : ordered_json(nullptr);
    ordered_json by_annotator = ordered_json::object();
    for (const auto& [annotator, labels] : ex.labels_by_annotator) {
      by_annotator[annotator] = labels_to_json(labels);
    }
    j["labels_by_annotator"] = by_annotator;
    j["gold"] = ex.gold ? labels_to_json(*ex.gold) : ordered_json(nullptr);
    out << detail::dump_line(j) << '\n';
  }
}

void save_examples(const std::vector<AnnotationExample>& examples,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write " + path.string());
  write_examples(examples, out);
  if (!out) throw IOError("write failed for " + path.string());
}

std::vector<AnnotationExample> parse_examples(std::istream& in, const std::string& source_name) {
  std::vector<AnnotationExample> out;
  detail::for_each_json_line(in, source_name, [&](const json& j, std::size_t line) {
    AnnotationExample ex;
    ex.example_id = require(j, "example_id").get<std::string>();
    ex.session_id = require(j, "session_id").get<std::string>();
    ex.utterance_id = j.value("utterance_id", ex.example_id);
    ex.target_text = require(j, "target_text").get<std::string>();
    ex.segment_index = j.value("segment_index", 0);
    ex.segment_count = j.value("segment_count", 1);
    if (j.contains("context")) ex.context = j.at("context").get<std::vector<std::string>>();
    if (j.contains("prior_text") && !j.at("prior_text").is_null()) {
      ex.prior_text = j.at("prior_text").get<std::string>();
    }
    if (j.contains("labels_by_annotator")) {
      for (const auto& [annotator, labels] : j.at("labels_by_annotator").items()) {
        ex.labels_by_annotator[annotator] = labels_from_json(labels);
      }
    }
    if (j.contains("gold") && !j.at("gold").is_null()) ex.gold = labels_from_json(j.at("gold"));
    if (ex.segment_count < 1 || ex.segment_index < 0 || ex.segment_index >= ex.segment_count) {
      throw ParseError(source_name, line, "segment_index must be in [0, segment_count)");
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<AnnotationExample> load_examples(const std::filesystem::path& path) {
  auto in = detail::open_input(path.string());
  return parse_examples(in, path.string());
}

}  // namespace talkmoves
