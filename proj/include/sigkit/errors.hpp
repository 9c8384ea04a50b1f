#ifndef SIGKIT_ERRORS_HPP
#define SIGKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sigkit {

/// Failure categories. Each maps onto one CLI exit code.
enum class ErrorKind {
  invalid_argument,
  empty_sample,
  degenerate_sample,
  insufficient_data,
  data_error,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::empty_sample: return "empty-sample";
    case ErrorKind::degenerate_sample: return "degenerate-sample";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::data_error: return "data-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const char* what) {
  if (!condition) fail(kind, what);
}

}  // namespace sigkit

#endif  // SIGKIT_ERRORS_HPP
