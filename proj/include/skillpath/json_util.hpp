/*
 * Copyright 2026 The Skillpath Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Small helpers for the JSON documents (calibration, nominal path, arm model,
// project config, session). Every failure carries the field path.

#ifndef SKILLPATH_JSON_UTIL_HPP_
#define SKILLPATH_JSON_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "skillpath/error.hpp"
#include "skillpath/geometry.hpp"

namespace skillpath {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "file not found: " + path.string());
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Writes via a sibling temp file and rename so readers never see a torn file.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot replace " + path.string());
}

inline Json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << what << ": malformed JSON at line " << line << ", column " << col;
    throw Error(ErrorKind::kParse, os.str());
  }
}

namespace json_field {

[[noreturn]] inline void fail(std::string_view where, std::string_view msg,
                              ErrorKind kind = ErrorKind::kParse) {
  throw Error(kind, std::string(where) + ": " + std::string(msg));
}

inline void require_object(const Json& j, std::string_view where) {
  if (!j.is_object()) fail(where, "expected an object");
}

inline void reject_unknown(const Json& j, std::string_view where,
                           std::initializer_list<std::string_view> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || item.key() == a;
    if (!known) fail(where, "unknown key '" + item.key() + "'");
  }
}

inline const Json& at(const Json& j, std::string_view where,
                      const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, "missing key '" + key + "'");
  return *it;
}

inline double number(const Json& j, std::string_view where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "number must be finite");
  return v;
}

inline double number(const Json& obj, std::string_view where,
                     const std::string& key, double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  return number(*it, std::string(where) + "." + key);
}

inline std::string string(const Json& j, std::string_view where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

inline bool boolean(const Json& j, std::string_view where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

inline Vec3 vec3(const Json& j, std::string_view where) {
  if (!j.is_array() || j.size() != 3) fail(where, "expected [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    v[i] = number(j[static_cast<std::size_t>(i)],
                  std::string(where) + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline void version(const Json& j, std::string_view where) {
  const Json& v = at(j, where, "version");
  if (!v.is_number_integer() || v.get<int>() != 1) {
    fail(std::string(where) + ".version", "unsupported version (expected 1)");
  }
}

}  // namespace json_field
}  // namespace skillpath

#endif  // SKILLPATH_JSON_UTIL_HPP_
