#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace talkmoves {

// Collapses runs of whitespace to a single space, trims both ends and drops
// ASCII control characters. Case, punctuation and non-ASCII bytes are kept.
std::string normalize_text(std::string_view text);

// Splits on ASCII whitespace; empty fields are skipped.
std::vector<std::string> split_whitespace(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view separator);

std::string to_lower_ascii(std::string_view text);

}  // namespace talkmoves
