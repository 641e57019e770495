/* C interface to the hered library. All handles are opaque; every call that can
   fail returns a hered_status and leaves a message in hered_last_error() (per thread). */
#ifndef HERED_H
#define HERED_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  HERED_OK = 0,
  HERED_E_INVALID_ARGUMENT = 1,
  HERED_E_SINGULAR_AT_ORIGIN = 2,
  HERED_E_OUT_OF_DOMAIN = 3,
  HERED_E_NOT_PSD = 4,
  HERED_E_CONVERGENCE_NOT_CERTIFIED = 5,
  HERED_E_UNBOUNDED_SHIFT = 6,
  HERED_E_TAIL_UNCERTIFIABLE = 7,
  HERED_E_MODEL_INVALID = 8,
  HERED_E_NOT_CONVERGED = 9,
  HERED_E_GENERATION_FAILED = 10,
  HERED_E_UNSUPPORTED_REGIME = 11,
  HERED_E_SYNTAX = 12,
  HERED_E_SEMANTIC = 13,
  HERED_E_IO = 14,
  HERED_E_PRECONDITION_FAILED = 15,
  HERED_E_INTERNAL = 99
} hered_status;

typedef struct hered_series hered_series;
typedef struct hered_operator hered_operator;
typedef struct hered_report hered_report;

const char* hered_version(void);
const char* hered_status_name(hered_status s);
/* Message of the last failed call on this thread; "" if none. */
const char* hered_last_error(void);
/* JSON object with error name, message and witness for the last failure. */
const char* hered_last_error_json(void);
/* Process exit class for a status: 0 ok, 3 malformed input, 1 otherwise. */
int hered_status_exit_code(hered_status s);

void hered_string_free(char* s);

/* Kernel-spec language */
hered_status hered_spec_canonical(const char* spec, char** out);
hered_status hered_series_parse(const char* spec, size_t N, hered_series** out);
hered_status hered_series_from_coeffs(const double* c, size_t len, hered_series** out);
size_t hered_series_length(const hered_series* s);
hered_status hered_series_coeffs(const hered_series* s, double* buf, size_t len);
/* k = 1/alpha to length N+1; residual may be NULL. */
hered_status hered_series_reciprocal(const hered_series* alpha, size_t N, hered_series** k_out, double* residual);
void hered_series_free(hered_series* s);

/* Operators (square complex matrices) */
hered_status hered_operator_from_csv(const char* path, hered_operator** out);
hered_status hered_operator_from_rowmajor(const double* re, const double* im, size_t d, hered_operator** out);
hered_status hered_operator_shift_section(const hered_series* kappa, int forward, size_t d, hered_operator** out);
size_t hered_operator_dim(const hered_operator* T);
hered_status hered_operator_norm(const hered_operator* T, double* out);
void hered_operator_free(hered_operator* T);

/* Subcommands. `command` is e.g. "kernel check"; `args_json` is a flat JSON object
   of option values (NULL for none). */
hered_status hered_run(const char* command, const char* args_json, hered_report** out);
const char* hered_report_json(const hered_report* r);
int hered_report_exit_code(const hered_report* r);
size_t hered_report_table_count(const hered_report* r);
const char* hered_report_table_name(const hered_report* r, size_t i);
const char* hered_report_table_csv(const hered_report* r, size_t i);
size_t hered_report_file_count(const hered_report* r);
const char* hered_report_file_name(const hered_report* r, size_t i);
const char* hered_report_file_text(const hered_report* r, size_t i);
void hered_report_free(hered_report* r);

#ifdef __cplusplus
}
#endif

#endif
