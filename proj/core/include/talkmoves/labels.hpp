#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace talkmoves {

// The five accountable-talk moves plus the "model utterance" label. Each is
// predicted by its own independent binary classifier.
enum class Move {
  adding_on,
  connecting,
  eliciting,
  probing,
  revoicing,
  model_utterance,
};

inline constexpr std::array<Move, 5> kTalkMoves = {
    Move::adding_on, Move::connecting, Move::eliciting, Move::probing, Move::revoicing};

inline constexpr std::array<Move, 6> kAllMoves = {
    Move::adding_on, Move::connecting,  Move::eliciting,
    Move::probing,   Move::revoicing,   Move::model_utterance};

std::string_view move_name(Move move);
// Throws UnknownMoveError.
Move parse_move(std::string_view name);
std::optional<Move> try_parse_move(std::string_view name);

// Five talk moves, then `model_utterance` when requested.
std::vector<Move> active_moves(bool include_model_utterance);

// Every flag an annotator can set on one example. Flags are independent:
// an utterance may carry several talk moves at once.
struct LabelSet {
  bool adding_on = false;
  bool connecting = false;
  bool eliciting = false;
  bool probing = false;
  bool revoicing = false;
  bool off_task = false;
  bool poor_transcription = false;
  bool model_utterance = false;

  bool get(Move move) const;
  void set(Move move, bool value);

  // True when no flag is set.
  bool empty() const;
  // True when at least one flag is set in both.
  bool intersects(const LabelSet& other) const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

// Column order used by the annotation CSV and by LabelSet serialization.
inline constexpr std::array<std::string_view, 8> kLabelColumns = {
    "adding_on", "connecting",         "eliciting",      "probing",
    "revoicing", "off_task", "poor_transcription", "model_utterance"};

// Flags addressed by position in kLabelColumns.
bool label_flag(const LabelSet& labels, std::size_t column);
void set_label_flag(LabelSet& labels, std::size_t column, bool value);

}  // namespace talkmoves
