// Truncated real power series c_0 + c_1 t + ... + c_N t^N with an optional
// closed-form generator that lets tails beyond N be bounded rigorously.
#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace hered {

struct Generator {
  enum class Kind {
    Derived,     // no closed form; nothing is known beyond N
    Binomial,    // (1 - t)^exponent
    Polynomial,  // coefficients vanish beyond `degree`
    FileList,    // finite list read from a file, zeros beyond `degree`
    PowerTail,   // c_n = amplitude * n^(-tail_exponent) for n >= from
  };
  Kind kind = Kind::Derived;
  double exponent = 0.0;
  double amplitude = 0.0;
  double tail_exponent = 0.0;
  std::size_t from = 0;
  std::size_t degree = 0;

  static Generator derived() { return {}; }
  static Generator binomial(double e);
  static Generator polynomial(std::size_t degree);
  static Generator file_list(std::size_t degree);
  static Generator power_tail(double A, double b, std::size_t from);

  bool closed_form() const { return kind != Kind::Derived; }
  std::string describe() const;
};

class TruncatedSeries {
 public:
  TruncatedSeries() = default;
  // Throws invalid_argument on empty input, non-finite entries, or a
  // Binomial tag that does not match the recurrence to 1e-14.
  explicit TruncatedSeries(std::vector<double> coeffs, Generator gen = Generator::derived());

  const std::vector<double>& coeffs() const { return c_; }
  std::size_t trunc_len() const { return c_.size(); }
  std::size_t N() const { return c_.size() - 1; }
  double operator[](std::size_t n) const { return c_[n]; }
  const Generator& generator() const { return gen_; }

  // Coefficient at any index; beyond N only for closed-form generators.
  double coefficient(std::size_t n) const;
  // Same series with a different truncation length (longer needs a closed form).
  TruncatedSeries resized(std::size_t len) const;

  // Bound r with |c_{n+1}| <= r |c_n| for all n >= N; nullopt if unknown.
  // A zero return means the coefficients vanish beyond N.
  std::optional<double> ratio_bound_beyond() const;

 private:
  std::vector<double> c_;
  Generator gen_;
};

enum class PowSign { PowPlus, PowMinus };

TruncatedSeries binomial_series(double a, PowSign sign, std::size_t N);
TruncatedSeries polynomial(std::vector<double> coeffs, std::size_t N);

// Convolution truncated to the shorter length; products of binomials stay closed form.
TruncatedSeries cauchy_product(const TruncatedSeries& f, const TruncatedSeries& g);

// sup-norm of (a*b)_n - delta_{n0}
double inversion_residual(const TruncatedSeries& a, const TruncatedSeries& b);

enum class KernelType { Critical, Subcritical, Indeterminate };
const char* kernel_type_name(KernelType t);

struct KernelPair {
  TruncatedSeries alpha;
  TruncatedSeries k;
  double inversion_residual = 0.0;
  bool is_np = false;
  bool is_wiener_alpha = false;
  bool is_wiener_k = false;
  KernelType type = KernelType::Indeterminate;
  std::vector<std::size_t> violations;  // indices n >= 1 with k_n <= 0

  bool valid() const;
};

KernelPair reciprocal(const TruncatedSeries& alpha, std::size_t N);
// Pair from a kernel k given directly; alpha = 1/k.
KernelPair pair_from_kernel(const TruncatedSeries& k);

double cesaro_number(double a, std::size_t n);
std::vector<double> cesaro_table(double a, std::size_t n_max);

// Bound on sum_{n>N} |c_n| r^n, 0 <= r <= 1. `known` false means nothing can
// be said; a known bound may be +inf (provably non-summable).
struct TailBound {
  bool known = false;
  double bound = 0.0;
};
TailBound abs_tail(const TruncatedSeries& f, double r = 1.0);
// Bound on sum_{n>N} n |c_n|, used as a Lipschitz budget on the unit circle.
TailBound derivative_tail(const TruncatedSeries& f);
// Bound on sum_{n>M} |c_n| eta^n for M <= N, 0 <= eta < 1 (known coefficients
// up to N, ratio bound beyond).
TailBound geometric_tail(const TruncatedSeries& f, std::size_t M, double eta);

struct Evaluation {
  std::complex<double> value;
  TailBound tail;
};
Evaluation evaluate(const TruncatedSeries& f, std::complex<double> z);

struct WienerNorm {
  double value = 0.0;  // partial sum up to N
  bool tail_known = false;
  double tail_bound = 0.0;
  bool summable() const;
};
WienerNorm wiener_norm(const TruncatedSeries& f);

// Value f(1) with certification where a closed form allows it.
struct ValueAtOne {
  double estimate = 0.0;
  double uncertainty = 0.0;  // +inf when nothing is known
  bool certified = false;
  std::string route;
};
ValueAtOne alpha_at_one(const TruncatedSeries& alpha, const TruncatedSeries* k = nullptr);

// Sum_{n >= M} c_n for a PowerTail-style closed form, used for kernels; returns
// bracket [lo, hi] of the exact tail from index M (M may exceed N).
struct TailSum {
  bool known = false;
  double lo = 0.0;
  double hi = 0.0;
};
TailSum tail_sum_from(const TruncatedSeries& f, std::size_t M);

// Text format: one coefficient per line, '#' starts a comment.
std::vector<double> parse_coefficient_text(const std::string& text);
std::vector<double> read_coefficient_file(const std::string& path);

}  // namespace hered
