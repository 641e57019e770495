#include "hered/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hered/error.hpp"

namespace hered {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_nonneg_integer(double e) { return e >= 0.0 && std::floor(e) == e; }

std::vector<double> binomial_coeffs(double e, std::size_t len) {
  std::vector<double> c(len);
  long double v = 1.0L;
  c[0] = 1.0;
  for (std::size_t n = 1; n < len; ++n) {
    v *= (static_cast<long double>(n) - 1.0L - e) / static_cast<long double>(n);
    c[n] = static_cast<double>(v);
  }
  return c;
}

double partial_sum(const std::vector<double>& c, std::size_t upto) {
  long double s = 0.0L;
  for (std::size_t n = 0; n <= upto && n < c.size(); ++n) s += c[n];
  return static_cast<double>(s);
}

}  // namespace

Generator Generator::binomial(double e) {
  Generator g;
  g.kind = Kind::Binomial;
  g.exponent = e;
  return g;
}

Generator Generator::polynomial(std::size_t degree) {
  Generator g;
  g.kind = Kind::Polynomial;
  g.degree = degree;
  return g;
}

Generator Generator::file_list(std::size_t degree) {
  Generator g;
  g.kind = Kind::FileList;
  g.degree = degree;
  return g;
}

Generator Generator::power_tail(double A, double b, std::size_t from) {
  Generator g;
  g.kind = Kind::PowerTail;
  g.amplitude = A;
  g.tail_exponent = b;
  g.from = from;
  return g;
}

std::string Generator::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::Derived: return "Derived";
    case Kind::Binomial: os << "Binomial(" << exponent << ")"; return os.str();
    case Kind::Polynomial: os << "Polynomial(degree=" << degree << ")"; return os.str();
    case Kind::FileList: os << "FileList(degree=" << degree << ")"; return os.str();
    case Kind::PowerTail:
      os << "PowerTail(A=" << amplitude << ",b=" << tail_exponent << ",from=" << from << ")";
      return os.str();
  }
  return "Derived";
}

TruncatedSeries::TruncatedSeries(std::vector<double> coeffs, Generator gen)
    : c_(std::move(coeffs)), gen_(gen) {
  if (c_.empty()) throw Error(Errc::invalid_argument, "series needs at least one coefficient");
  for (std::size_t n = 0; n < c_.size(); ++n)
    if (!std::isfinite(c_[n]))
      throw Error(Errc::invalid_argument, "non-finite coefficient", {{"index", n}});

  switch (gen_.kind) {
    case Generator::Kind::Binomial: {
      const double e = gen_.exponent;
      if (!std::isfinite(e)) throw Error(Errc::invalid_argument, "non-finite binomial exponent");
      if (c_[0] != 1.0) throw Error(Errc::invalid_argument, "binomial series must start at 1");
      for (std::size_t n = 1; n < c_.size(); ++n) {
        const double expect = c_[n - 1] * ((static_cast<double>(n) - 1.0 - e) / static_cast<double>(n));
        const double scale = std::max(std::abs(c_[n]), std::abs(expect));
        if (std::abs(c_[n] - expect) > 1e-14 * scale + 1e-300)
          throw Error(Errc::invalid_argument, "coefficients do not follow the binomial recurrence",
                      {{"index", n}});
      }
      break;
    }
    case Generator::Kind::Polynomial:
    case Generator::Kind::FileList:
      if (gen_.degree > N()) {
        gen_ = Generator::derived();
        break;
      }
      for (std::size_t n = gen_.degree + 1; n < c_.size(); ++n)
        if (c_[n] != 0.0)
          throw Error(Errc::invalid_argument, "polynomial tag with nonzero coefficient past degree",
                      {{"index", n}});
      break;
    case Generator::Kind::PowerTail: {
      const double A = gen_.amplitude, b = gen_.tail_exponent;
      if (!(A > 0.0) || !std::isfinite(A) || !(b > 0.0) || !std::isfinite(b) || gen_.from < 1)
        throw Error(Errc::invalid_argument, "power tail needs A > 0, b > 0, from >= 1");
      if (gen_.from > c_.size()) {
        gen_ = Generator::derived();
        break;
      }
      for (std::size_t n = gen_.from; n < c_.size(); ++n) {
        const double expect = A * std::pow(static_cast<double>(n), -b);
        if (std::abs(c_[n] - expect) > 1e-12 * expect)
          throw Error(Errc::invalid_argument, "coefficients do not follow the power tail",
                      {{"index", n}});
      }
      break;
    }
    case Generator::Kind::Derived:
      break;
  }
}

double TruncatedSeries::coefficient(std::size_t n) const {
  if (n <= N()) return c_[n];
  switch (gen_.kind) {
    case Generator::Kind::Polynomial:
    case Generator::Kind::FileList:
      return 0.0;
    case Generator::Kind::PowerTail:
      return gen_.amplitude * std::pow(static_cast<double>(n), -gen_.tail_exponent);
    case Generator::Kind::Binomial: {
      long double v = c_.back();
      for (std::size_t j = N() + 1; j <= n; ++j)
        v *= (static_cast<long double>(j) - 1.0L - gen_.exponent) / static_cast<long double>(j);
      return static_cast<double>(v);
    }
    case Generator::Kind::Derived:
      break;
  }
  throw Error(Errc::tail_uncertifiable, "coefficient beyond truncation of a derived series",
              {{"index", n}, {"N", N()}});
}

TruncatedSeries TruncatedSeries::resized(std::size_t len) const {
  if (len == 0) throw Error(Errc::invalid_argument, "truncation length must be positive");
  if (len <= c_.size()) {
    Generator g = gen_;
    if ((g.kind == Generator::Kind::Polynomial || g.kind == Generator::Kind::FileList) &&
        g.degree >= len)
      g = Generator::derived();
    if (g.kind == Generator::Kind::PowerTail && g.from > len) g = Generator::derived();
    return TruncatedSeries(std::vector<double>(c_.begin(), c_.begin() + static_cast<long>(len)), g);
  }
  if (gen_.kind == Generator::Kind::Binomial) return TruncatedSeries(binomial_coeffs(gen_.exponent, len), gen_);
  if (!gen_.closed_form())
    throw Error(Errc::tail_uncertifiable, "cannot extend a derived series past its truncation",
                {{"requested", len}, {"available", c_.size()}});
  std::vector<double> c = c_;
  c.reserve(len);
  for (std::size_t n = c_.size(); n < len; ++n) c.push_back(coefficient(n));
  return TruncatedSeries(std::move(c), gen_);
}

std::optional<double> TruncatedSeries::ratio_bound_beyond() const {
  const std::size_t N_ = N();
  switch (gen_.kind) {
    case Generator::Kind::Polynomial:
    case Generator::Kind::FileList:
      return 0.0;
    case Generator::Kind::Binomial: {
      const double e = gen_.exponent;
      if (is_nonneg_integer(e) && static_cast<double>(N_) >= e) return 0.0;
      if (e >= -1.0) {
        double r = 1.0;
        for (std::size_t n = N_; static_cast<double>(n) < e + 1.0; ++n)
          r = std::max(r, std::abs(static_cast<double>(n) - e) / static_cast<double>(n + 1));
        return r;
      }
      return (static_cast<double>(N_) - e) / static_cast<double>(N_ + 1);
    }
    case Generator::Kind::PowerTail: {
      if (N_ >= gen_.from) return 1.0;
      if (c_.back() == 0.0) return std::nullopt;
      const double next = coefficient(N_ + 1);
      return std::max(1.0, std::abs(next / c_.back()));
    }
    case Generator::Kind::Derived:
      break;
  }
  return std::nullopt;
}

TruncatedSeries binomial_series(double a, PowSign sign, std::size_t N) {
  if (!std::isfinite(a)) throw Error(Errc::invalid_argument, "binomial exponent must be finite");
  if (N < 1) throw Error(Errc::invalid_argument, "truncation N must be >= 1");
  const double e = sign == PowSign::PowPlus ? a : -a;
  return TruncatedSeries(binomial_coeffs(e, N + 1), Generator::binomial(e));
}

TruncatedSeries polynomial(std::vector<double> coeffs, std::size_t N) {
  if (coeffs.empty()) throw Error(Errc::invalid_argument, "polynomial needs coefficients");
  std::size_t degree = coeffs.size() - 1;
  while (degree > 0 && coeffs[degree] == 0.0) --degree;
  coeffs.resize(N + 1, 0.0);
  return TruncatedSeries(std::move(coeffs), Generator::polynomial(degree));
}

TruncatedSeries cauchy_product(const TruncatedSeries& f, const TruncatedSeries& g) {
  const std::size_t len = std::min(f.trunc_len(), g.trunc_len());
  const auto& gf = f.generator();
  const auto& gg = g.generator();
  if (gf.kind == Generator::Kind::Binomial && gg.kind == Generator::Kind::Binomial) {
    const double e = gf.exponent + gg.exponent;
    return TruncatedSeries(binomial_coeffs(e, len), Generator::binomial(e));
  }
  std::vector<double> out(len);
  const auto& a = f.coeffs();
  const auto& b = g.coeffs();
  for (std::size_t n = 0; n < len; ++n) {
    long double s = 0.0L;
    for (std::size_t j = 0; j <= n; ++j) s += static_cast<long double>(a[j]) * b[n - j];
    out[n] = static_cast<double>(s);
  }
  auto finite_degree = [](const Generator& x) -> std::optional<std::size_t> {
    if (x.kind == Generator::Kind::Polynomial || x.kind == Generator::Kind::FileList) return x.degree;
    if (x.kind == Generator::Kind::Binomial && is_nonneg_integer(x.exponent))
      return static_cast<std::size_t>(x.exponent);
    return std::nullopt;
  };
  const auto df = finite_degree(gf), dg = finite_degree(gg);
  if (df && dg && *df + *dg < len) return TruncatedSeries(std::move(out), Generator::polynomial(*df + *dg));
  return TruncatedSeries(std::move(out));
}

double inversion_residual(const TruncatedSeries& a, const TruncatedSeries& b) {
  const std::size_t len = std::min(a.trunc_len(), b.trunc_len());
  double worst = 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    long double s = 0.0L;
    for (std::size_t j = 0; j <= n; ++j) s += static_cast<long double>(a[j]) * b[n - j];
    const double r = std::abs(static_cast<double>(s - (n == 0 ? 1.0L : 0.0L)));
    worst = std::max(worst, r);
  }
  return worst;
}

const char* kernel_type_name(KernelType t) {
  switch (t) {
    case KernelType::Critical: return "Critical";
    case KernelType::Subcritical: return "Subcritical";
    case KernelType::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

bool KernelPair::valid() const {
  return inversion_residual <= 1e-10 && alpha[0] == 1.0 && std::abs(k[0] - 1.0) <= 1e-15 &&
         violations.empty();
}

namespace {

bool np_signs(const TruncatedSeries& alpha) {
  if (alpha[0] != 1.0) return false;
  for (std::size_t n = 1; n < alpha.trunc_len(); ++n)
    if (alpha[n] > 1e-14) return false;
  return true;
}

KernelPair assemble(TruncatedSeries alpha, TruncatedSeries k) {
  KernelPair p;
  p.inversion_residual = inversion_residual(alpha, k);
  for (std::size_t n = 1; n < k.trunc_len(); ++n)
    if (!(k[n] > 0.0)) p.violations.push_back(n);
  p.is_np = np_signs(alpha);
  p.is_wiener_alpha = wiener_norm(alpha).summable();
  p.is_wiener_k = wiener_norm(k).summable();
  const ValueAtOne v = alpha_at_one(alpha, &k);
  if (v.certified && std::abs(v.estimate) <= v.uncertainty + 1e-10)
    p.type = KernelType::Critical;
  else if (v.certified && v.estimate > v.uncertainty + 1e-10)
    p.type = KernelType::Subcritical;
  else
    p.type = KernelType::Indeterminate;
  p.alpha = std::move(alpha);
  p.k = std::move(k);
  return p;
}

std::vector<double> invert_coeffs(const std::vector<double>& a, std::size_t len) {
  std::vector<double> k(len);
  std::vector<long double> kl(len);
  const long double inv0 = 1.0L / a[0];
  kl[0] = inv0;
  k[0] = static_cast<double>(inv0);
  for (std::size_t n = 1; n < len; ++n) {
    long double s = 0.0L;
    const std::size_t top = std::min(n, a.size() - 1);
    for (std::size_t j = 1; j <= top; ++j) s += static_cast<long double>(a[j]) * kl[n - j];
    kl[n] = -inv0 * s;
    k[n] = static_cast<double>(kl[n]);
  }
  return k;
}

}  // namespace

KernelPair reciprocal(const TruncatedSeries& alpha_in, std::size_t N) {
  if (N < 1) throw Error(Errc::invalid_argument, "truncation N must be >= 1");
  if (alpha_in[0] == 0.0) throw Error(Errc::singular_at_origin, "alpha_0 = 0 has no reciprocal");
  TruncatedSeries alpha = alpha_in.trunc_len() == N + 1 ? alpha_in : alpha_in.resized(N + 1);
  std::vector<double> k = invert_coeffs(alpha.coeffs(), N + 1);

  Generator g = Generator::derived();
  if (alpha.generator().kind == Generator::Kind::Binomial) {
    // The inverse of (1-t)^e is (1-t)^{-e}; keep the closed form when the
    // recurrence agrees with it, which preserves tail certificates.
    const std::vector<double> closed = binomial_coeffs(-alpha.generator().exponent, N + 1);
    bool agree = true;
    for (std::size_t n = 0; n <= N && agree; ++n)
      agree = std::abs(closed[n] - k[n]) <= 1e-10 * std::max(1.0, std::abs(closed[n]));
    if (agree) {
      k = closed;
      g = Generator::binomial(-alpha.generator().exponent);
    }
  }
  return assemble(std::move(alpha), TruncatedSeries(std::move(k), g));
}

KernelPair pair_from_kernel(const TruncatedSeries& k) {
  if (k[0] == 0.0) throw Error(Errc::singular_at_origin, "k_0 = 0 has no reciprocal");
  KernelPair inv = reciprocal(k, k.N());
  return assemble(inv.k, k);
}

double cesaro_number(double a, std::size_t n) {
  long double v = 1.0L;
  for (std::size_t j = 1; j <= n; ++j)
    v *= (static_cast<long double>(a) + static_cast<long double>(j) - 1.0L) / static_cast<long double>(j);
  return static_cast<double>(v);
}

std::vector<double> cesaro_table(double a, std::size_t n_max) {
  std::vector<double> t(n_max + 1);
  long double v = 1.0L;
  t[0] = 1.0;
  for (std::size_t j = 1; j <= n_max; ++j) {
    v *= (static_cast<long double>(a) + static_cast<long double>(j) - 1.0L) / static_cast<long double>(j);
    t[j] = static_cast<double>(v);
  }
  return t;
}

TailBound geometric_tail(const TruncatedSeries& f, std::size_t M, double eta) {
  TailBound t;
  const auto r = f.ratio_bound_beyond();
  if (!r) return t;
  long double s = 0.0L;
  for (std::size_t n = M + 1; n <= f.N(); ++n) s += std::abs(f[n]) * std::pow(static_cast<long double>(eta), n);
  t.known = true;
  if (*r == 0.0) {
    t.bound = static_cast<double>(s);
    return t;
  }
  const double q = *r * eta;
  if (q >= 1.0) {
    t.bound = kInf;
    return t;
  }
  const double cN = std::abs(f[f.N()]) * std::pow(eta, static_cast<double>(f.N()));
  t.bound = static_cast<double>(s) + cN * q / (1.0 - q);
  return t;
}

TailBound abs_tail(const TruncatedSeries& f, double r) {
  TailBound t;
  const auto& g = f.generator();
  const std::size_t N = f.N();
  const auto rb = f.ratio_bound_beyond();
  if (rb && *rb == 0.0) return {true, 0.0};

  std::optional<double> best;
  if (g.kind == Generator::Kind::Binomial) {
    const double e = g.exponent;
    if (e > 0.0 && static_cast<double>(N) > e) best = std::abs(partial_sum(f.coeffs(), N));
    if (e < 0.0 && r >= 1.0) return {true, kInf};
  } else if (g.kind == Generator::Kind::PowerTail && N + 1 >= g.from && N >= 1) {
    const double b = g.tail_exponent;
    best = b > 1.0 ? g.amplitude * std::pow(static_cast<double>(N), 1.0 - b) / (b - 1.0) : kInf;
  }
  if (r < 1.0) {
    const TailBound geo = geometric_tail(f, N, r);
    if (geo.known) best = best ? std::min(*best, geo.bound) : geo.bound;
  }
  if (!best) return t;
  return {true, *best};
}

TailBound derivative_tail(const TruncatedSeries& f) {
  const auto& g = f.generator();
  const std::size_t N = f.N();
  const auto rb = f.ratio_bound_beyond();
  if (rb && *rb == 0.0) return {true, 0.0};
  if (g.kind == Generator::Kind::Binomial) {
    const double e = g.exponent;
    // n c_n = -e [ (1-t)^{e-1} ]_{n-1}; that series has one sign past e-1 and sums to 0.
    if (e > 1.0 && static_cast<double>(N) > e) {
      const std::vector<double> b = binomial_coeffs(e - 1.0, N + 1);
      return {true, std::abs(e) * (std::abs(b[N]) + std::abs(partial_sum(b, N)))};
    }
    return {true, kInf};
  }
  if (g.kind == Generator::Kind::PowerTail && N + 1 >= g.from && N >= 1) {
    const double b = g.tail_exponent;
    if (b > 2.0) return {true, g.amplitude * std::pow(static_cast<double>(N), 2.0 - b) / (b - 2.0)};
    return {true, kInf};
  }
  return {};
}

Evaluation evaluate(const TruncatedSeries& f, std::complex<double> z) {
  if (std::abs(z) > 1.0 + 1e-15)
    throw Error(Errc::out_of_domain, "evaluation point outside the closed unit disc",
                {{"abs_z", std::abs(z)}});
  std::complex<long double> acc = 0.0L;
  const std::complex<long double> zl(z.real(), z.imag());
  for (std::size_t n = f.trunc_len(); n-- > 0;) acc = acc * zl + static_cast<long double>(f[n]);
  Evaluation ev;
  ev.value = {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
  ev.tail = abs_tail(f, std::min(1.0, std::abs(z)));
  return ev;
}

bool WienerNorm::summable() const { return tail_known && std::isfinite(tail_bound); }

WienerNorm wiener_norm(const TruncatedSeries& f) {
  long double s = 0.0L;
  for (double c : f.coeffs()) s += std::abs(c);
  WienerNorm w;
  w.value = static_cast<double>(s);
  const TailBound t = abs_tail(f, 1.0);
  w.tail_known = t.known;
  w.tail_bound = t.known ? t.bound : 0.0;
  return w;
}

TailSum tail_sum_from(const TruncatedSeries& f, std::size_t M) {
  const auto& g = f.generator();
  const std::size_t N = f.N();
  if (M <= N) {
    long double head = 0.0L;
    for (std::size_t n = M; n <= N; ++n) head += f[n];
    TailSum rest = tail_sum_from(f, N + 1);
    if (!rest.known) return rest;
    rest.lo += static_cast<double>(head);
    rest.hi += static_cast<double>(head);
    return rest;
  }
  const auto rb = f.ratio_bound_beyond();
  if (rb && *rb == 0.0) return {true, 0.0, 0.0};
  if (g.kind == Generator::Kind::PowerTail && M >= g.from) {
    const double A = g.amplitude, b = g.tail_exponent, m = static_cast<double>(M);
    if (b <= 1.0) return {true, kInf, kInf};
    // Convex decreasing summand: trapezoid and midpoint comparisons bracket the sum.
    const double lo = A * std::pow(m, 1.0 - b) / (b - 1.0) + 0.5 * A * std::pow(m, -b);
    const double hi = A * std::pow(m - 0.5, 1.0 - b) / (b - 1.0);
    return {true, lo, hi};
  }
  if (g.kind == Generator::Kind::Binomial) {
    const double e = g.exponent;
    if (e < 0.0) return {true, kInf, kInf};
    if (e > 0.0 && static_cast<double>(M) > e + 1.0 && M - 1 <= N) {
      const double s = -partial_sum(f.coeffs(), M - 1);
      return {true, s, s};
    }
  }
  return {};
}

ValueAtOne alpha_at_one(const TruncatedSeries& alpha, const TruncatedSeries* k) {
  ValueAtOne v;
  const auto& g = alpha.generator();
  const double S = partial_sum(alpha.coeffs(), alpha.N());
  if (g.kind == Generator::Kind::Binomial && g.exponent > 0.0) {
    v = {0.0, 0.0, true, "closed form (1-t)^e at t=1"};
    return v;
  }
  const TailBound t = abs_tail(alpha, 1.0);
  if (t.known && std::isfinite(t.bound)) {
    v = {S, t.bound, true, "partial sum with certified tail"};
    return v;
  }
  if (k != nullptr) {
    bool positive = true;
    for (std::size_t n = 0; n < k->trunc_len() && positive; ++n) positive = (*k)[n] > 0.0;
    const TailSum ks = positive ? tail_sum_from(*k, 0) : TailSum{};
    if (ks.known) {
      if (!std::isfinite(ks.lo)) {
        v = {0.0, 0.0, true, "kernel diverges at t=1"};
        return v;
      }
      const double a_hi = 1.0 / ks.lo, a_lo = 1.0 / ks.hi;
      v = {0.5 * (a_hi + a_lo), 0.5 * (a_hi - a_lo), true, "reciprocal of summable kernel"};
      return v;
    }
  }
  v = {S, kInf, false, "partial sum only"};
  return v;
}

std::vector<double> parse_coefficient_text(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(b, e - b + 1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
      throw Error(Errc::invalid_argument, "bad coefficient on line " + std::to_string(lineno),
                  {{"line", lineno}});
    out.push_back(v);
  }
  if (out.empty()) throw Error(Errc::invalid_argument, "coefficient text holds no values");
  return out;
}

std::vector<double> read_coefficient_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open coefficient file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_coefficient_text(ss.str());
}

}  // namespace hered
