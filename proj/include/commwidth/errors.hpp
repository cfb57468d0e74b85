#pragma once

#include <stdexcept>
#include <string>

namespace cw {

enum class Err {
  InvalidSpec,
  FiberMismatch,
  NonFinite,
  GraphViolation,
  NotProper,
  NotLoxodromic,
  BandViolation,
  EndsMismatch,
  ToleranceExceeded,
  NotMaterialized,
  Internal,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::InvalidSpec: return "InvalidSpec";
    case Err::FiberMismatch: return "FiberMismatch";
    case Err::NonFinite: return "NonFinite";
    case Err::GraphViolation: return "GraphViolation";
    case Err::NotProper: return "NotProper";
    case Err::NotLoxodromic: return "NotLoxodromic";
    case Err::BandViolation: return "BandViolation";
    case Err::EndsMismatch: return "EndsMismatch";
    case Err::ToleranceExceeded: return "ToleranceExceeded";
    case Err::NotMaterialized: return "NotMaterialized";
    case Err::Internal: return "Internal";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

}  // namespace cw
