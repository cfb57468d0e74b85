#include <cstring>
#include <string>

#include "commwidth/serialize.hpp"
#include "commwidth/svg.hpp"
#include "commwidth/verify.hpp"

extern "C" {
#include "commwidth.h"
}

namespace {

thread_local std::string g_last_error;

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kConstruction = 3;
constexpr int kTolerance = 4;
constexpr int kInternal = 5;

int code_of(cw::Err e) {
  switch (e) {
    case cw::Err::InvalidSpec:
    case cw::Err::FiberMismatch:
      return kInvalid;
    case cw::Err::NotProper:
    case cw::Err::GraphViolation:
    case cw::Err::BandViolation:
    case cw::Err::NotLoxodromic:
    case cw::Err::EndsMismatch:
    case cw::Err::NotMaterialized:
    case cw::Err::NonFinite:
      return kConstruction;
    case cw::Err::ToleranceExceeded:
      return kTolerance;
    case cw::Err::Internal:
      return kInternal;
  }
  return kInternal;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const cw::Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return kInvalid;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return kInternal;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

cw::SpecDocument parse_spec(const char* spec_json, const char* overrides_json) {
  if (!spec_json) throw cw::Error(cw::Err::InvalidSpec, "spec text is null");
  cw::json doc = cw::json::parse(spec_json);
  if (overrides_json && *overrides_json) {
    cw::json ov = cw::json::parse(overrides_json);
    if (!ov.is_object()) throw cw::Error(cw::Err::InvalidSpec, "overrides must be a JSON object");
    if (!doc.contains("options") || !doc["options"].is_object()) doc["options"] = cw::json::object();
    for (auto& [key, value] : ov.items()) doc["options"][key] = value;
  }
  return cw::spec_from_json(doc);
}

}  // namespace

struct cw_certificate {
  cw::FactorizationCertificate cert;
};

extern "C" {

int cw_factor(const char* spec_json, const char* overrides_json, cw_certificate** out) {
  if (out) *out = nullptr;
  return guarded([&]() {
    if (!out) throw cw::Error(cw::Err::InvalidSpec, "output handle is null");
    cw::SpecDocument spec = parse_spec(spec_json, overrides_json);
    cw::CommutatorResult res = cw::commutator_factorization(spec.map, spec.options);
    *out = new cw_certificate{std::move(res.cert)};
    if (!(*out)->cert.report.pass) {
      g_last_error = "verification report exceeds its tolerance";
      return kTolerance;
    }
    return kOk;
  });
}

int cw_powers(const char* spec_json, const char* overrides_json, cw_certificate** out) {
  if (out) *out = nullptr;
  return guarded([&]() {
    if (!out) throw cw::Error(cw::Err::InvalidSpec, "output handle is null");
    cw::SpecDocument spec = parse_spec(spec_json, overrides_json);
    cw::FactorizationCertificate cert =
        cw::power_word_decomposition(spec.map, spec.exponents, spec.options);
    *out = new cw_certificate{std::move(cert)};
    if (!(*out)->cert.report.pass) {
      g_last_error = "verification report exceeds its tolerance";
      return kTolerance;
    }
    return kOk;
  });
}

int cw_cert_to_json(const cw_certificate* cert, char** out) {
  if (out) *out = nullptr;
  return guarded([&]() {
    if (!cert || !out) throw cw::Error(cw::Err::InvalidSpec, "null argument");
    *out = dup_string(cw::to_text(cw::cert_to_json(cert->cert)));
    return kOk;
  });
}

int cw_cert_pass(const cw_certificate* cert) {
  return (cert && cert->cert.report.pass) ? 1 : 0;
}

int cw_verify(const char* cert_json, char** report_json) {
  if (report_json) *report_json = nullptr;
  return guarded([&]() {
    if (!cert_json) throw cw::Error(cw::Err::InvalidSpec, "certificate text is null");
    cw::FactorizationCertificate cert = cw::cert_from_json(cw::json::parse(cert_json));
    cw::MapPtr word = cw::claim_word(cert);
    cw::VerificationReport rep =
        cw::verify_identity(*cert.input, *word, cert.report.window, cert.report.grid,
                            cert.report.tolerance);
    if (report_json) *report_json = dup_string(cw::to_text(cw::report_to_json(rep)));
    if (!rep.pass) {
      g_last_error = "re-verification exceeds the stored tolerance";
      return kTolerance;
    }
    return kOk;
  });
}

int cw_plot(const char* cert_json, char** svg) {
  if (svg) *svg = nullptr;
  return guarded([&]() {
    if (!cert_json || !svg) throw cw::Error(cw::Err::InvalidSpec, "null argument");
    cw::FactorizationCertificate cert = cw::cert_from_json(cw::json::parse(cert_json));
    *svg = dup_string(cw::svg_plot(cert));
    return kOk;
  });
}

const char* cw_last_error(void) { return g_last_error.c_str(); }

void cw_cert_free(cw_certificate* cert) { delete cert; }

void cw_string_free(char* s) { delete[] s; }

}  // extern "C"
