#pragma once

#include "commwidth/factor.hpp"

namespace cw {

inline constexpr const char* kSchemaVersion = "1";

// Rebuild a map expression from its canonical JSON form; rejects unknown node
// kinds with Err::InvalidSpec.
MapPtr map_from_json(Fiber fiber, const json& j);

Fiber fiber_from_json(const json& j);
json fiber_to_json(Fiber f);

// Input document for the factor/powers commands.
struct SpecDocument {
  Fiber fiber = Fiber::Point;
  MapPtr map;
  PipelineOptions options;
  std::vector<i64> exponents;  // empty unless the spec carries them
};

SpecDocument spec_from_json(const json& j);
json spec_to_json(const SpecDocument& spec);

json report_to_json(const VerificationReport& rep);
VerificationReport report_from_json(const json& j);

json suited_to_json(const SuitedDecomposition& s);
SuitedPtr suited_from_json(const json& j);

json cert_to_json(const FactorizationCertificate& cert);
FactorizationCertificate cert_from_json(const json& j);

// Canonical text form used for files: 2-space indent, trailing newline.
std::string to_text(const json& j);

}  // namespace cw
