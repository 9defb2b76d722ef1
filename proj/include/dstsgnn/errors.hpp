#pragma once

#include <stdexcept>
#include <string>

namespace dstsgnn {

/// Failure categories surfaced by the library. The CLI maps these to exit codes.
enum class ErrorKind {
  Dimension,
  ZeroDegree,
  EigFailure,
  RankDeficient,
  Config,
  Data,
  Io,
  Parse,
  Shape,
  Format,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Dimension: return "DimensionError";
    case ErrorKind::ZeroDegree: return "ZeroDegree";
    case ErrorKind::EigFailure: return "EigFailure";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Data: return "DataError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::Format: return "FormatError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

inline std::string shape_str(long rows, long cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace detail
}  // namespace dstsgnn
