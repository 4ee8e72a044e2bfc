#ifndef KGR_TESTS_SUPPORT_HPP_
#define KGR_TESTS_SUPPORT_HPP_

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "doctest.h"
#include "kgr/error.hpp"

namespace kgr::test {

inline std::filesystem::path data_dir() { return KGR_TEST_DATA_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Unique scratch directory under the build tree, emptied on creation.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::path(KGR_TEST_SCRATCH_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no kgr::Error thrown");
  return ErrorCode::kIoError;
}

}  // namespace kgr::test

#endif  // KGR_TESTS_SUPPORT_HPP_
