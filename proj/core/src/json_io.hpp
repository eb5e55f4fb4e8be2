#pragma once

// Internal JSONL helpers shared by the file-format code. Not installed.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "json.hpp"
#include "sguq/error.hpp"

namespace sguq::detail {

using json = nlohmann::json;

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

// Calls fn(line_number, object) for every non-empty line. Parse failures
// become ParseError naming the 1-based line number.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(std::size_t, const json&)>& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    fn(lineno, obj);
  }
}

inline json parse_object(const std::string& text, const std::string& context) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(context + ": " + e.what());
  }
}

}  // namespace sguq::detail
