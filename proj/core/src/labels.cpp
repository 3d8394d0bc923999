#include "talkmoves/labels.hpp"

#include "talkmoves/errors.hpp"

namespace talkmoves {

std::string_view move_name(Move move) {
  switch (move) {
    case Move::adding_on: return "adding_on";
    case Move::connecting: return "connecting";
    case Move::eliciting: return "eliciting";
    case Move::probing: return "probing";
    case Move::revoicing: return "revoicing";
    case Move::model_utterance: return "model_utterance";
  }
  return "unknown";
}

std::optional<Move> try_parse_move(std::string_view name) {
  for (Move m : kAllMoves) {
    if (move_name(m) == name) return m;
  }
  return std::nullopt;
}

Move parse_move(std::string_view name) {
  if (auto m = try_parse_move(name)) return *m;
  throw UnknownMoveError("unknown talk move '" + std::string(name) + "'");
}

std::vector<Move> active_moves(bool include_model_utterance) {
  std::vector<Move> moves(kTalkMoves.begin(), kTalkMoves.end());
  if (include_model_utterance) moves.push_back(Move::model_utterance);
  return moves;
}

bool LabelSet::get(Move move) const {
  switch (move) {
    case Move::adding_on: return adding_on;
    case Move::connecting: return connecting;
    case Move::eliciting: return eliciting;
    case Move::probing: return probing;
    case Move::revoicing: return revoicing;
    case Move::model_utterance: return model_utterance;
  }
  return false;
}

void LabelSet::set(Move move, bool value) {
  switch (move) {
    case Move::adding_on: adding_on = value; break;
    case Move::connecting: connecting = value; break;
    case Move::eliciting: eliciting = value; break;
    case Move::probing: probing = value; break;
    case Move::revoicing: revoicing = value; break;
    case Move::model_utterance: model_utterance = value; break;
  }
}

bool LabelSet::empty() const {
  for (std::size_t i = 0; i < kLabelColumns.size(); ++i) {
    if (label_flag(*this, i)) return false;
  }
  return true;
}

bool LabelSet::intersects(const LabelSet& other) const {
  for (std::size_t i = 0; i < kLabelColumns.size(); ++i) {
    if (label_flag(*this, i) && label_flag(other, i)) return true;
  }
  return false;
}

bool label_flag(const LabelSet& labels, std::size_t column) {
  switch (column) {
    case 0: return labels.adding_on;
    case 1: return labels.connecting;
    case 2: return labels.eliciting;
    case 3: return labels.probing;
    case 4: return labels.revoicing;
    case 5: return labels.off_task;
    case 6: return labels.poor_transcription;
    case 7: return labels.model_utterance;
    default: throw DomainError("label column out of range");
  }
}

void set_label_flag(LabelSet& labels, std::size_t column, bool value) {
  switch (column) {
    case 0: labels.adding_on = value; break;
    case 1: labels.connecting = value; break;
    case 2: labels.eliciting = value; break;
    case 3: labels.probing = value; break;
    case 4: labels.revoicing = value; break;
    case 5: labels.off_task = value; break;
    case 6: labels.poor_transcription = value; break;
    case 7: labels.model_utterance = value; break;
    default: throw DomainError("label column out of range");
  }
}

}  // namespace talkmoves
