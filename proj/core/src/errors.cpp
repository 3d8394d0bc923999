#include "talkmoves/errors.hpp"

namespace talkmoves {

Error::Error(std::string kind, const std::string& message)
    : std::runtime_error(message), kind_(std::move(kind)) {}

ParseError::ParseError(std::string source, std::size_t line, const std::string& detail)
    : Error("ParseError", source + ":" + std::to_string(line) + ": " + detail),
      source_(std::move(source)),
      line_(line) {}

}  // namespace talkmoves
