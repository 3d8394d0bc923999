#include "talkmoves/tokenizer.hpp"

#include "talkmoves/errors.hpp"
#include "talkmoves/text.hpp"

namespace talkmoves {

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
  return split_whitespace(text);
}

std::string WhitespaceTokenizer::detokenize(std::span<const std::string> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out.append(tokens[i]);
  }
  return out;
}

std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view name) {
  if (name == "whitespace") return std::make_shared<WhitespaceTokenizer>();
  throw ValidationError("unknown tokenizer '" + std::string(name) + "'");
}

}  // namespace talkmoves
