#pragma once

// Internal helpers for line-delimited JSON files.

#include <fstream>
#include <functional>
#include <stdexcept>
#include <istream>
#include <string>

#include <nlohmann/json.hpp>

#include "talkmoves/errors.hpp"

namespace talkmoves::detail {

using ordered_json = nlohmann::ordered_json;

// Raised by require(); reported as a ParseError with the line number.
class FieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Calls `fn(json, line_number)` for every non-blank line. JSON syntax errors
// and nlohmann type errors raised by `fn` become ParseError.
inline void for_each_json_line(std::istream& in, const std::string& source,
                               const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source, number, std::string("malformed JSON: ") + e.what());
    }
    try {
      fn(value, number);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, number, e.what());
    } catch (const FieldError& e) {
      throw ParseError(source, number, e.what());
    }
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path);
  return in;
}

inline std::string dump_line(const ordered_json& value) {
  return value.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

template <typename Json>
inline const Json& require(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FieldError(std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

}  // namespace talkmoves::detail
