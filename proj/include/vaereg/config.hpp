// vaereg/config.hpp

// Copyright 2026  The vaereg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vaereg/data.hpp"
#include "vaereg/error.hpp"

namespace vaereg {

enum class ValueType { kString, kInt, kReal, kBool };

using ConfigValue = std::variant<std::string, std::int64_t, double, bool>;

struct KeySpec {
  std::string key;
  ValueType type;
  ConfigValue default_value;
  std::string help;
  bool required = false;  // a string key that must be set to a non-empty value
};

using Schema = std::vector<KeySpec>;

inline const char *value_type_name(ValueType t) {
  switch (t) {
    case ValueType::kString: return "string";
    case ValueType::kInt: return "integer";
    case ValueType::kReal: return "real";
    case ValueType::kBool: return "boolean";
  }
  return "?";
}

inline std::string format_value(const ConfigValue &v) {
  if (auto s = std::get_if<std::string>(&v)) return *s;
  if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (auto d = std::get_if<double>(&v)) return format_double(*d);
  return std::get<bool>(v) ? "true" : "false";
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Converts `text` to the schema type; TypeError names the key.
inline ConfigValue parse_value(std::string_view text, ValueType type,
                               const std::string &key) {
  auto bad = [&]() -> ConfigValue {
    fail(Errc::kTypeError, "key '" + key + "' expects " + value_type_name(type) +
                               ", got '" + std::string(text) + "'");
  };
  switch (type) {
    case ValueType::kString:
      return std::string(text);
    case ValueType::kInt: {
      std::int64_t v = 0;
      const char *b = text.data();
      const char *e = b + text.size();
      if (b != e && *b == '+') ++b;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e || b == e) return bad();
      return v;
    }
    case ValueType::kReal: {
      double v = 0.0;
      if (text.empty() || !parse_double(text, v)) return bad();
      return v;
    }
    case ValueType::kBool:
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      return bad();
  }
  return bad();
}

/// A flat typed key/value map. Every schema key is present.
class RunConfig {
 public:
  RunConfig() = default;
  explicit RunConfig(const Schema &schema) : schema_(schema) {
    for (const auto &k : schema_) values_[k.key] = k.default_value;
  }

  const Schema &schema() const { return schema_; }

  const KeySpec &spec(const std::string &key) const {
    for (const auto &k : schema_)
      if (k.key == key) return k;
    fail(Errc::kUnknownKey, "unknown key '" + key + "'");
  }

  void set(const std::string &key, ConfigValue v) {
    const KeySpec &k = spec(key);
    if (v.index() != static_cast<std::size_t>(k.type)) {
      // Integers are accepted where reals are expected.
      if (k.type == ValueType::kReal && std::holds_alternative<std::int64_t>(v))
        v = static_cast<double>(std::get<std::int64_t>(v));
      else
        fail(Errc::kTypeError, "key '" + key + "' expects " + value_type_name(k.type));
    }
    values_[key] = std::move(v);
  }

  void set_text(const std::string &key, std::string_view text) {
    set(key, parse_value(text, spec(key).type, key));
  }

  const ConfigValue &get(const std::string &key) const {
    auto it = values_.find(key);
    if (it == values_.end()) fail(Errc::kUnknownKey, "unknown key '" + key + "'");
    return it->second;
  }

  const std::string &str(const std::string &key) const {
    return std::get<std::string>(checked(key, ValueType::kString));
  }
  std::int64_t integer(const std::string &key) const {
    return std::get<std::int64_t>(checked(key, ValueType::kInt));
  }
  double real(const std::string &key) const {
    return std::get<double>(checked(key, ValueType::kReal));
  }
  bool boolean(const std::string &key) const {
    return std::get<bool>(checked(key, ValueType::kBool));
  }

  /// Non-negative integer as a count.
  std::size_t count(const std::string &key) const {
    const auto v = integer(key);
    if (v < 0) fail(Errc::kInvalidConfig, "key '" + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
  }

 private:
  const ConfigValue &checked(const std::string &key, ValueType t) const {
    if (spec(key).type != t)
      fail(Errc::kTypeError, "key '" + key + "' is not " + value_type_name(t));
    return get(key);
  }

  Schema schema_;
  std::map<std::string, ConfigValue> values_;
};

/// Lines of `key = value`; `#` starts a comment; later keys override earlier.
/// Values are laid over `base`, which also supplies the schema.
inline RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(Errc::kParseError, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      fail(Errc::kParseError, "line " + std::to_string(line_no) + ": empty key");
    try {
      base.set_text(key, value);
    } catch (const Error &e) {
      fail(e.code(), "line " + std::to_string(line_no) + ": " +
                         std::string(e.what()).substr(errc_name(e.code()).size() + 2));
    }
  }
  return base;
}

inline RunConfig parse_config(std::string_view text, const Schema &schema) {
  return parse_config(text, RunConfig(schema));
}

inline RunConfig load_config(const std::string &path, const Schema &schema) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIoError, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), schema);
}

/// Fails with InvalidConfig naming the first required key left empty.
inline void require_keys(const RunConfig &cfg) {
  for (const auto &k : cfg.schema())
    if (k.required && format_value(cfg.get(k.key)).empty())
      fail(Errc::kInvalidConfig, "missing required key '" + k.key + "'");
}

/// `key = value` lines in schema order; parse_config reads them back.
inline std::string format_config(const RunConfig &cfg) {
  std::string out;
  for (const auto &k : cfg.schema())
    out += k.key + " = " + format_value(cfg.get(k.key)) + "\n";
  return out;
}

}  // namespace vaereg
