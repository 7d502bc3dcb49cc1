#pragma once

// Newline-delimited JSON reading and writing.

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "lingad/error.hpp"

namespace lingad {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Calls fn(record, line_number) for each non-blank line. Line numbers are
/// 1-based. Parse failures and exceptions from fn are rethrown as DataError
/// prefixed with the path and line.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!record.is_object()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": record is not an object");
    }
    try {
      fn(record, line_no);
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write " + path.string());
  }

  template <class Json>
  void write(const Json& record) {
    out_ << record.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw DataError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Optional string field: absent and null are equivalent.
inline std::optional<std::string> optional_string(const json& record, const char* key) {
  const auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

inline std::string required_string(const json& record, const char* key) {
  auto v = optional_string(record, key);
  if (!v) throw DataError(std::string("missing field '") + key + "'");
  return *v;
}

}  // namespace lingad
