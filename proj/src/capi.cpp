#include "hered/hered.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "hered/commands.hpp"
#include "hered/error.hpp"
#include "hered/kernel_spec.hpp"
#include "hered/operator.hpp"

struct hered_series {
  hered::TruncatedSeries s;
};
struct hered_operator {
  hered::Matrix T;
};
struct hered_report {
  std::string json_text;
  int exit_code = 0;
  std::vector<std::string> table_names, table_csv, file_names, file_text;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_json = "{}";

void clear_error() {
  g_error.clear();
  g_error_json = "{}";
}

hered_status record(const std::exception& e, const std::string& command = "") {
  g_error = e.what();
  g_error_json = hered::dump_json(hered::error_report(command, e), 0);
  if (const auto* he = dynamic_cast<const hered::Error*>(&e)) return static_cast<hered_status>(he->code());
  return HERED_E_INTERNAL;
}

hered_status null_arg(const char* what) {
  return record(hered::Error(hered::Errc::invalid_argument, std::string(what) + " must not be NULL"));
}

template <class F>
hered_status guard(F&& f, const std::string& command = "") {
  clear_error();
  try {
    f();
    return HERED_OK;
  } catch (const std::exception& e) {
    return record(e, command);
  } catch (...) {
    g_error = "unknown failure";
    return HERED_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* hered_version(void) { return "1.0.0"; }

const char* hered_status_name(hered_status s) {
  if (s == HERED_OK) return "ok";
  if (s == HERED_E_INTERNAL) return "internal";
  if (s >= HERED_E_INVALID_ARGUMENT && s <= HERED_E_PRECONDITION_FAILED)
    return hered::errc_name(static_cast<hered::Errc>(s));
  return "unknown";
}

const char* hered_last_error(void) { return g_error.c_str(); }
const char* hered_last_error_json(void) { return g_error_json.c_str(); }

int hered_status_exit_code(hered_status s) {
  switch (s) {
    case HERED_OK: return 0;
    case HERED_E_INVALID_ARGUMENT:
    case HERED_E_SYNTAX:
    case HERED_E_SEMANTIC:
    case HERED_E_IO:
    case HERED_E_UNSUPPORTED_REGIME: return 3;
    default: return 1;
  }
}

void hered_string_free(char* s) { std::free(s); }

hered_status hered_spec_canonical(const char* spec, char** out) {
  if (!spec || !out) return null_arg("spec and out");
  return guard([&] {
    const std::string text = hered::pretty_print(*hered::parse_kernel_spec(spec));
    *out = dup_string(text);
  });
}

hered_status hered_series_parse(const char* spec, size_t N, hered_series** out) {
  if (!spec || !out) return null_arg("spec and out");
  return guard([&] { *out = new hered_series{hered::elaborate(*hered::parse_kernel_spec(spec), N)}; });
}

hered_status hered_series_from_coeffs(const double* c, size_t len, hered_series** out) {
  if (!c || !out) return null_arg("coefficients and out");
  return guard([&] { *out = new hered_series{hered::TruncatedSeries(std::vector<double>(c, c + len))}; });
}

size_t hered_series_length(const hered_series* s) { return s ? s->s.trunc_len() : 0; }

hered_status hered_series_coeffs(const hered_series* s, double* buf, size_t len) {
  if (!s || !buf) return null_arg("series and buffer");
  return guard([&] {
    if (len < s->s.trunc_len()) throw hered::Error(hered::Errc::invalid_argument, "buffer too short");
    std::copy(s->s.coeffs().begin(), s->s.coeffs().end(), buf);
  });
}

hered_status hered_series_reciprocal(const hered_series* alpha, size_t N, hered_series** k_out, double* residual) {
  if (!alpha || !k_out) return null_arg("alpha and k_out");
  return guard([&] {
    auto pair = hered::reciprocal(alpha->s, N);
    if (residual) *residual = pair.inversion_residual;
    *k_out = new hered_series{std::move(pair.k)};
  });
}

void hered_series_free(hered_series* s) { delete s; }

hered_status hered_operator_from_csv(const char* path, hered_operator** out) {
  if (!path || !out) return null_arg("path and out");
  return guard([&] { *out = new hered_operator{hered::read_matrix_csv(path)}; });
}

hered_status hered_operator_from_rowmajor(const double* re, const double* im, size_t d, hered_operator** out) {
  if (!re || !out) return null_arg("re and out");
  return guard([&] {
    if (d == 0) throw hered::Error(hered::Errc::invalid_argument, "dimension must be positive");
    const auto D = static_cast<Eigen::Index>(d);
    hered::Matrix T(D, D);
    for (Eigen::Index i = 0; i < D; ++i)
      for (Eigen::Index j = 0; j < D; ++j) {
        const auto k = static_cast<size_t>(i) * d + static_cast<size_t>(j);
        T(i, j) = hered::cd(re[k], im ? im[k] : 0.0);
      }
    *out = new hered_operator{std::move(T)};
  });
}

hered_status hered_operator_shift_section(const hered_series* kappa, int forward, size_t d, hered_operator** out) {
  if (!kappa || !out) return null_arg("kappa and out");
  return guard([&] {
    auto s = hered::shift_section(kappa->s, forward ? hered::Direction::Forward : hered::Direction::Backward, d);
    *out = new hered_operator{s.op.matrix()};
  });
}

size_t hered_operator_dim(const hered_operator* T) { return T ? static_cast<size_t>(T->T.rows()) : 0; }

hered_status hered_operator_norm(const hered_operator* T, double* out) {
  if (!T || !out) return null_arg("operator and out");
  return guard([&] { *out = hered::operator_norm(T->T); });
}

void hered_operator_free(hered_operator* T) { delete T; }

hered_status hered_run(const char* command, const char* args_json, hered_report** out) {
  if (!command || !out) return null_arg("command and out");
  return guard([&] {
    hered::json args = hered::json::object();
    if (args_json && *args_json) {
      try {
        args = hered::json::parse(args_json);
      } catch (const hered::json::exception& e) {
        throw hered::Error(hered::Errc::invalid_argument, std::string("arguments are not valid JSON: ") + e.what());
      }
    }
    auto res = hered::run_command(command, args);
    auto* r = new hered_report;
    r->json_text = hered::dump_json(res.report);
    r->exit_code = res.exit_code;
    for (const auto& t : res.tables) r->table_names.push_back(t.name), r->table_csv.push_back(hered::table_csv(t));
    for (const auto& f : res.files) r->file_names.push_back(f.first), r->file_text.push_back(f.second);
    *out = r;
  }, command);
}

const char* hered_report_json(const hered_report* r) { return r ? r->json_text.c_str() : ""; }
int hered_report_exit_code(const hered_report* r) { return r ? r->exit_code : 1; }
size_t hered_report_table_count(const hered_report* r) { return r ? r->table_names.size() : 0; }
const char* hered_report_table_name(const hered_report* r, size_t i) {
  return r && i < r->table_names.size() ? r->table_names[i].c_str() : "";
}
const char* hered_report_table_csv(const hered_report* r, size_t i) {
  return r && i < r->table_csv.size() ? r->table_csv[i].c_str() : "";
}
size_t hered_report_file_count(const hered_report* r) { return r ? r->file_names.size() : 0; }
const char* hered_report_file_name(const hered_report* r, size_t i) {
  return r && i < r->file_names.size() ? r->file_names[i].c_str() : "";
}
const char* hered_report_file_text(const hered_report* r, size_t i) {
  return r && i < r->file_text.size() ? r->file_text[i].c_str() : "";
}
void hered_report_free(hered_report* r) { delete r; }

}  // extern "C"
