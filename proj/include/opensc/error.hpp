#pragma once

#include <stdexcept>
#include <string>

namespace opensc {

enum class ErrorKind {
  kValidation,  // caller supplied something that violates a contract
  kParse,       // malformed document
  kIo,
  kRuntime,
  kExternal,    // LLM / embedding service failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string path = {})
      : std::runtime_error(path.empty() ? what : path + ": " + what),
        kind_(kind),
        path_(std::move(path)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Location of the offending field, e.g. "objects[2].bbox".
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorKind kind_;
  std::string path_;
};

inline Error validation_error(const std::string& what, std::string path = {}) {
  return Error(ErrorKind::kValidation, what, std::move(path));
}

inline Error parse_error(const std::string& what, std::string path = {}) {
  return Error(ErrorKind::kParse, what, std::move(path));
}

}  // namespace opensc
