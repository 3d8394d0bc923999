#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace talkmoves {

// Defines the "token" unit behind the segment and total length limits.
// detokenize(tokenize(s)) must equal s up to whitespace normalization.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(std::span<const std::string> tokens) const = 0;
  virtual std::string name() const = 0;

  std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const std::string> tokens) const override;
  std::string name() const override { return "whitespace"; }
};

// Throws ValidationError for an unknown name.
std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view name);

}  // namespace talkmoves
