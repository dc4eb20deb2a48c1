#pragma once

#include <stdexcept>
#include <string>

namespace mgl {

// Error categories surfaced through the C API as integer status codes.
enum class ErrorCode : int {
  kOk = 0,
  kShape = 1,       // input/output dimension mismatch
  kStructure = 2,   // incompatible network structure (e.g. unequal depths)
  kParameter = 3,   // invalid builder / config parameter
  kDomain = 4,      // point outside the domain of a map
  kDegenerate = 5,  // degenerate construction (zero-mass chart, failed cover)
  kResolution = 6,  // numerical resolution too coarse
  kCapacity = 7,    // size cap exceeded
  kFit = 8,         // regression could not be formed
  kScope = 9,       // requested case outside supported scope
  kParse = 10,      // malformed spec string or document
  kIo = 11,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace mgl
