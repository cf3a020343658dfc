#pragma once

// Private helpers shared by the JSON readers in core/src.

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fishforge/error.hpp"

namespace fishforge::detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Parses `text`, converting parse failures into ConfigError carrying a
/// 1-based line:column position.
inline json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(std::string(what) + ":" + std::to_string(line) + ":" +
                      std::to_string(col) + ": malformed JSON (" + e.what() +
                      ")");
  }
}

inline void require_object(const json& j, std::string_view what) {
  if (!j.is_object()) {
    throw ConfigError(std::string(what) + ": expected a JSON object");
  }
}

/// Rejects keys outside `allowed` so that typos do not pass silently.
inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                       std::string_view what) {
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(std::string(what) + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, std::string_view what) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + "." + key + ": " + e.what());
  }
}

}  // namespace fishforge::detail
