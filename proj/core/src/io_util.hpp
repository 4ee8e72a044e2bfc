#ifndef KGR_SRC_IO_UTIL_HPP_
#define KGR_SRC_IO_UTIL_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <string>

#include "json.hpp"
#include "kgr/error.hpp"

namespace kgr::detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return in;
}

// Calls `fn(object, line_number)` for every non-blank line. Lines that are
// not JSON objects raise ParseError with the line number.
inline void for_each_json_line(
    std::istream& in,
    const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParseError, e.what(), line_no);
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kParseError, "expected a JSON object", line_no);
    }
    fn(obj, line_no);
  }
}

inline const nlohmann::json& require_field(const nlohmann::json& obj,
                                           const char* name,
                                           std::size_t line_no) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) {
    throw Error(ErrorCode::kParseError,
                std::string("missing field \"") + name + "\"", line_no);
  }
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* name,
                                  std::size_t line_no) {
  const auto& v = require_field(obj, name, line_no);
  if (!v.is_string()) {
    throw Error(ErrorCode::kParseError,
                std::string("field \"") + name + "\" must be a string",
                line_no);
  }
  return v.get<std::string>();
}

}  // namespace kgr::detail

#endif  // KGR_SRC_IO_UTIL_HPP_
