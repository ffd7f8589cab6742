#pragma once

#include <stdexcept>
#include <string>

namespace qkd {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  config,           // invalid parameters or malformed input files
  size,             // length/dimension mismatch
  alignment,        // no clock offset reached the correlation threshold
  estimation_abort, // QBER bound above threshold
  authentication,   // tag mismatch on the classical channel
  key_exhaustion,   // a key pool or key file ran dry
  no_code,          // QBER outside the rate table
  numeric,          // FFT rounding guard tripped
  construction,     // parity-check construction failed
  empty_sample,
  session,          // generic session-level abort (e.g. no passing blocks)
  io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::size: return "size";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::estimation_abort: return "estimation_abort";
    case ErrorKind::authentication: return "authentication";
    case ErrorKind::key_exhaustion: return "key_exhaustion";
    case ErrorKind::no_code: return "no_code";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::construction: return "construction";
    case ErrorKind::empty_sample: return "empty_sample";
    case ErrorKind::session: return "session";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace qkd
