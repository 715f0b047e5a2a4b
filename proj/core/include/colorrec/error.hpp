#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace colorrec {

enum class ErrorCode {
  invalid_argument,
  parse,
  not_found,
  wrong_kind,
  invalid_slot,
  unknown_code,
  format,
  diverged,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library. `path` carries a JSON-pointer-like
// location for parse errors and is empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string path = {})
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        code_(code),
        path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorCode code_;
  std::string path_;
};

}  // namespace colorrec
