#ifndef COMMWIDTH_H
#define COMMWIDTH_H

/* C interface to the commutator-width factorization library.
 *
 * All entry points return a status code:
 *   0  success (for factorizations: the certificate passes)
 *   2  invalid input (malformed JSON, unknown node kinds, orientation failure)
 *   3  construction failure (NotProper, GraphViolation, BandViolation, ...)
 *   4  certificate produced but its verification report fails its tolerance
 *   5  internal error
 * On nonzero status cw_last_error() describes the failure.  Strings returned
 * through char** are owned by the caller and released with cw_string_free();
 * certificates are released with cw_cert_free().
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef struct cw_certificate cw_certificate;

/* Commutator factorization of the homeomorphism in spec_json (schema "1").
 * overrides_json may be NULL or a JSON object patching the spec's options
 * (tolerance, window, grid, horizon, resolution).  On status 0 or 4, *out
 * holds a certificate. */
int cw_factor(const char* spec_json, const char* overrides_json, cw_certificate** out);

/* Power-word decomposition; exponents come from the spec options or the
 * overrides (key "exponents", a list of nonzero integers, length > 1). */
int cw_powers(const char* spec_json, const char* overrides_json, cw_certificate** out);

/* Canonical JSON text of a certificate (schema "1"). */
int cw_cert_to_json(const cw_certificate* cert, char** out);

/* 1 when the certificate's verification report passes, else 0. */
int cw_cert_pass(const cw_certificate* cert);

/* Re-verify a serialized certificate on its stored window/grid/tolerance;
 * writes a fresh verification report as JSON.  Status 0 iff the re-check
 * passes (4 when it fails the tolerance). */
int cw_verify(const char* cert_json, char** report_json);

/* Deterministic SVG rendering of a serialized certificate. */
int cw_plot(const char* cert_json, char** svg);

/* Description of the most recent failure on this thread. */
const char* cw_last_error(void);

void cw_cert_free(cw_certificate* cert);
void cw_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* COMMWIDTH_H */
