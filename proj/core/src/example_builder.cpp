#include "talkmoves/example_builder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "talkmoves/errors.hpp"
#include "talkmoves/text.hpp"

namespace talkmoves {

std::string_view truncation_name(TruncationSide side) {
  return side == TruncationSide::keep_start ? "keep_start" : "keep_end";
}

TruncationSide parse_truncation(std::string_view name) {
  if (name == "keep_start") return TruncationSide::keep_start;
  if (name == "keep_end") return TruncationSide::keep_end;
  throw ValidationError("truncation_side must be keep_start or keep_end, got '" +
                        std::string(name) + "'");
}

void PreprocessConfig::validate() const {
  if (context_size != 0 && context_size != kMaxContextSize) {
    throw ValidationError("context_size must be 0 or 2, got " + std::to_string(context_size));
  }
  if (balancing_factor && *balancing_factor <= 0) {
    throw ValidationError("balancing_factor must be a positive integer");
  }
  if (total_token_limit <= 0) throw ValidationError("total_token_limit must be positive");
  if (segment_token_limit <= 0) throw ValidationError("segment_token_limit must be positive");
  if (segment_token_limit >= total_token_limit) {
    throw ValidationError("segment_token_limit must be smaller than total_token_limit");
  }
}

namespace {

bool is_sentence_final(const std::string& token) {
  std::size_t end = token.size();
  while (end > 0) {
    char c = token[end - 1];
    if (c == '"' || c == '\'' || c == ')' || c == ']') {
      --end;
      continue;
    }
    return c == '.' || c == '?' || c == '!';
  }
  return false;
}

std::string_view role_tag(SpeakerRole role) {
  return role == SpeakerRole::instructor ? "INSTRUCTOR:" : "STUDENT:";
}

std::optional<std::string> fit_prior(const std::optional<std::string>& prior,
                                     std::size_t target_tokens, const PreprocessConfig& config,
                                     const Tokenizer& tokenizer) {
  if (config.context_size == 0 || !prior) return std::nullopt;
  const std::size_t budget = static_cast<std::size_t>(config.total_token_limit) - target_tokens;
  auto tokens = truncate_prior(tokenizer.tokenize(*prior), budget, config.truncation_side);
  if (tokens.empty()) return std::nullopt;
  return tokenizer.detokenize(tokens);
}

std::vector<AnnotationExample> examples_for_utterance(const Session& session, std::size_t index,
                                                      const PreprocessConfig& config,
                                                      const Tokenizer& tokenizer) {
  const Utterance& utt = session.utterances[index];
  auto segments = segment_long_utterance(utt, config.segment_token_limit, tokenizer);
  auto prior = build_context(session, index, config);
  auto context = context_turns(session, index, kMaxContextSize);
  std::vector<AnnotationExample> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    AnnotationExample ex = assemble_example(seg, prior, config, tokenizer);
    ex.example_id = utt.utterance_id + "#" + std::to_string(seg.index);
    ex.session_id = session.session_id;
    ex.utterance_id = utt.utterance_id;
    ex.context = context;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

std::vector<Segment> segment_text(std::string_view text, int limit, const Tokenizer& tokenizer) {
  if (limit <= 0) throw ValidationError("segment limit must be positive");
  const auto tokens = tokenizer.tokenize(text);
  const std::size_t cap = static_cast<std::size_t>(limit);
  if (tokens.size() <= cap) return {Segment{std::string(text), 0, 1}};

  // Cuts may move back into the last 20% of the window to land on a
  // sentence boundary.
  const std::size_t min_cut = cap - cap / 5 + 1;
  std::vector<std::size_t> cuts;
  std::size_t pos = 0;
  while (tokens.size() - pos > cap) {
    std::size_t len = cap;
    for (std::size_t l = cap; l >= min_cut && l > 0; --l) {
      if (is_sentence_final(tokens[pos + l - 1])) {
        len = l;
        break;
      }
    }
    pos += len;
    cuts.push_back(pos);
  }
  cuts.push_back(tokens.size());

  std::vector<Segment> segments;
  segments.reserve(cuts.size());
  std::size_t begin = 0;
  const int count = static_cast<int>(cuts.size());
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    std::span<const std::string> piece(tokens.data() + begin, cuts[i] - begin);
    segments.push_back(Segment{tokenizer.detokenize(piece), static_cast<int>(i), count});
    begin = cuts[i];
  }
  return segments;
}

std::vector<Segment> segment_long_utterance(const Utterance& utterance, int limit,
                                            const Tokenizer& tokenizer) {
  return segment_text(utterance.text, limit, tokenizer);
}

std::vector<std::string> context_turns(const Session& session, std::size_t target_index,
                                       int count) {
  std::vector<std::string> turns;
  if (count <= 0 || target_index >= session.utterances.size()) return turns;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(count), target_index);
  for (std::size_t i = target_index - n; i < target_index; ++i) {
    const Utterance& u = session.utterances[i];
    turns.push_back(std::string(role_tag(u.speaker_role)) + " " + u.text);
  }
  return turns;
}

std::optional<std::string> build_context(const Session& session, std::size_t target_index,
                                         const PreprocessConfig& config) {
  if (target_index >= session.utterances.size()) {
    throw ValidationError("target index out of range for session '" + session.session_id + "'");
  }
  const Utterance& target = session.utterances[target_index];
  if (target.speaker_role != SpeakerRole::instructor) {
    throw NotInstructorError("utterance '" + target.utterance_id + "' is not an instructor turn");
  }
  if (config.context_size == 0) return std::nullopt;
  auto turns = context_turns(session, target_index, config.context_size);
  if (turns.empty()) return std::nullopt;
  return join(turns, " ");
}

std::vector<std::string> truncate_prior(std::vector<std::string> prior_tokens, std::size_t budget,
                                        TruncationSide side) {
  if (prior_tokens.size() <= budget) return prior_tokens;
  if (side == TruncationSide::keep_start) {
    prior_tokens.resize(budget);
  } else {
    prior_tokens.erase(prior_tokens.begin(),
                       prior_tokens.begin() + static_cast<std::ptrdiff_t>(prior_tokens.size() - budget));
  }
  return prior_tokens;
}

AnnotationExample assemble_example(const Segment& target, const std::optional<std::string>& prior,
                                   const PreprocessConfig& config, const Tokenizer& tokenizer) {
  const std::size_t target_tokens = tokenizer.count(target.text);
  if (target_tokens > static_cast<std::size_t>(config.total_token_limit)) {
    throw TargetTooLongError("target has " + std::to_string(target_tokens) +
                             " tokens, limit is " + std::to_string(config.total_token_limit));
  }
  AnnotationExample ex;
  ex.target_text = target.text;
  ex.segment_index = target.index;
  ex.segment_count = target.count;
  ex.prior_text = fit_prior(prior, target_tokens, config, tokenizer);
  return ex;
}

AnnotationExample prepare_example(const AnnotationExample& example, const PreprocessConfig& config,
                                  const Tokenizer& tokenizer) {
  std::optional<std::string> prior;
  if (config.context_size > 0 && !example.context.empty()) {
    const std::size_t n =
        std::min<std::size_t>(static_cast<std::size_t>(config.context_size), example.context.size());
    std::vector<std::string> turns(example.context.end() - static_cast<std::ptrdiff_t>(n),
                                   example.context.end());
    prior = join(turns, " ");
  }
  Segment seg{example.target_text, example.segment_index, example.segment_count};
  AnnotationExample out = example;
  AnnotationExample assembled = assemble_example(seg, prior, config, tokenizer);
  out.prior_text = std::move(assembled.prior_text);
  return out;
}

std::vector<AnnotationExample> balance_labels(const std::vector<AnnotationExample>& examples,
                                              Move move, int factor, std::uint64_t seed) {
  if (factor <= 0) throw ValidationError("balancing factor must be a positive integer");
  std::vector<std::size_t> positives;
  std::size_t negatives = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!examples[i].gold) {
      throw ValidationError("example '" + examples[i].example_id + "' has no gold labels");
    }
    if (examples[i].gold->get(move)) {
      positives.push_back(i);
    } else {
      ++negatives;
    }
  }
  if (positives.empty()) {
    throw NoPositivesError("no positive examples for " + std::string(move_name(move)));
  }
  const std::size_t f = static_cast<std::size_t>(factor);
  const std::size_t target = (negatives + f - 1) / f;
  std::vector<AnnotationExample> out = examples;
  if (positives.size() >= target) return out;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, positives.size() - 1);
  out.reserve(examples.size() + target - positives.size());
  for (std::size_t k = positives.size(); k < target; ++k) {
    out.push_back(examples[positives[pick(rng)]]);
  }
  return out;
}

std::vector<AnnotationExample> sample_examples(const std::vector<Session>& corpus,
                                               const SampleOptions& options,
                                               const Tokenizer& tokenizer) {
  options.preprocess.validate();
  std::vector<std::pair<std::size_t, std::size_t>> pool;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    for (std::size_t u = 0; u < corpus[s].utterances.size(); ++u) {
      if (corpus[s].utterances[u].speaker_role == SpeakerRole::instructor) pool.emplace_back(s, u);
    }
  }
  if (options.count > pool.size()) {
    throw InsufficientDataError("requested " + std::to_string(options.count) +
                                " instructor utterances, corpus has " +
                                std::to_string(pool.size()));
  }
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  if (options.count == pool.size()) {
    chosen = pool;
  } else {
    std::mt19937_64 rng(options.seed);
    std::sample(pool.begin(), pool.end(), std::back_inserter(chosen), options.count, rng);
  }
  std::vector<AnnotationExample> out;
  for (auto [s, u] : chosen) {
    auto exs = examples_for_utterance(corpus[s], u, options.preprocess, tokenizer);
    out.insert(out.end(), std::make_move_iterator(exs.begin()), std::make_move_iterator(exs.end()));
  }
  return out;
}

std::vector<AnnotationExample> all_examples(const std::vector<Session>& corpus,
                                            const PreprocessConfig& preprocess,
                                            const Tokenizer& tokenizer) {
  preprocess.validate();
  std::vector<AnnotationExample> out;
  for (const auto& session : corpus) {
    for (std::size_t u = 0; u < session.utterances.size(); ++u) {
      if (session.utterances[u].speaker_role != SpeakerRole::instructor) continue;
      auto exs = examples_for_utterance(session, u, preprocess, tokenizer);
      out.insert(out.end(), std::make_move_iterator(exs.begin()), std::make_move_iterator(exs.end()));
    }
  }
  return out;
}

TrainTestSplit train_test_split(const std::vector<AnnotationExample>& examples, double ratio,
                                std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("split ratio must be in (0, 1)");

  std::unordered_map<std::string, std::size_t> group_size;
  for (const auto& ex : examples) ++group_size[ex.utterance_id];
  std::vector<std::string> groups;
  groups.reserve(group_size.size());
  for (const auto& [key, _] : group_size) groups.push_back(key);
  std::sort(groups.begin(), groups.end());
  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(examples.size())));
  std::unordered_map<std::string, bool> in_train;
  std::size_t train_count = 0;
  for (const auto& g : groups) {
    bool take = train_count < target;
    in_train[g] = take;
    if (take) train_count += group_size[g];
  }
  TrainTestSplit split;
  for (const auto& ex : examples) {
    (in_train[ex.utterance_id] ? split.train : split.test).push_back(ex);
  }
  return split;
}

}  // namespace talkmoves
