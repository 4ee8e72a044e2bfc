#ifndef KGR_TEXT_HPP_
#define KGR_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

// ASCII-only case folding and whitespace handling. Bytes >= 0x80 pass
// through untouched so UTF-8 text survives.
namespace kgr::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
// Lowercase, trim, and replace every whitespace run with one space.
std::string collapse(std::string_view s);
std::vector<std::string> split(std::string_view s, char delimiter);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace kgr::text

#endif  // KGR_TEXT_HPP_
