#include "hered/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "hered/error.hpp"

namespace hered {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using ColSparse = Eigen::SparseMatrix<cd, Eigen::ColMajor>;

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  const std::size_t n = x.size();
  if (n < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(n), my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

ColSparse sparse_of(const Matrix& T) {
  ColSparse S = to_sparse(T);
  S.makeCompressed();
  return S;
}

void check_probe_args(double a, double p, const std::vector<std::size_t>& grid) {
  if (!(a > 0.0) || !std::isfinite(a)) throw Error(Errc::invalid_argument, "Cesaro order a must be positive");
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(Errc::invalid_argument, "exponent p must be >= 1");
  if (grid.empty()) throw Error(Errc::invalid_argument, "n_grid must be nonempty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw Error(Errc::invalid_argument, "n_grid must be strictly increasing");
}

// ||T^j x||^p for j = 0..n_max.
std::vector<double> power_norms(const ColSparse& S, Vector x, std::size_t n_max, double p) {
  std::vector<double> out(n_max + 1, 0.0);
  for (std::size_t j = 0; j <= n_max; ++j) {
    const double nx = x.norm();
    out[j] = p == 2.0 ? nx * nx : std::pow(nx, p);
    if (nx == 0.0) break;
    if (j < n_max) x = S * x;
  }
  return out;
}

double cesaro_value(const std::vector<double>& norms, const std::vector<double>& ka, const std::vector<double>& kb,
                    std::size_t n) {
  long double s = 0.0L;
  for (std::size_t j = 0; j <= n; ++j)
    if (norms[j] != 0.0) s += static_cast<long double>(ka[n - j]) * norms[j];
  return static_cast<double>(s / kb[n]);
}

int trend_rank(TrendKind k) {
  switch (k) {
    case TrendKind::DecaysToZero: return 0;
    case TrendKind::Bounded: return 1;
    case TrendKind::LogGrowth: return 2;
    case TrendKind::PowerGrowth: return 3;
  }
  return 3;
}

TrendFit worst_of(const std::vector<TrendFit>& fits) {
  TrendFit w = fits.front();
  for (const auto& f : fits)
    if (trend_rank(f.kind) > trend_rank(w.kind) || (f.kind == w.kind && f.sup > w.sup)) w = f;
  return w;
}

}  // namespace

const char* trend_name(TrendKind t) {
  switch (t) {
    case TrendKind::Bounded: return "Bounded";
    case TrendKind::DecaysToZero: return "DecaysToZero";
    case TrendKind::LogGrowth: return "LogGrowth";
    case TrendKind::PowerGrowth: return "PowerGrowth";
  }
  return "Bounded";
}

json TrendFit::to_json() const {
  return {{"trend", trend_name(kind)},       {"sup", sup},           {"last", last},
          {"exponent_fit", exponent_fit},    {"growth_gamma", growth_gamma},
          {"log_slope", log_slope},          {"r2_log", r2_log},     {"r2_loglog", r2_loglog}};
}

std::vector<std::size_t> log_grid(std::size_t lo, std::size_t hi, std::size_t per_decade) {
  if (lo < 1 || hi < lo || per_decade < 1) throw Error(Errc::invalid_argument, "log_grid needs 1 <= lo <= hi");
  std::vector<std::size_t> g{lo};
  const double step = std::pow(10.0, 1.0 / static_cast<double>(per_decade));
  for (double x = static_cast<double>(lo) * step; x < static_cast<double>(hi); x *= step) {
    const auto n = static_cast<std::size_t>(std::llround(x));
    if (n > g.back() && n < hi) g.push_back(n);
  }
  if (g.back() != hi) g.push_back(hi);
  return g;
}

TrendFit classify_trend(const std::vector<std::size_t>& n_in, const std::vector<double>& v_in) {
  if (n_in.size() != v_in.size() || n_in.empty()) throw Error(Errc::invalid_argument, "trend input sizes differ");
  std::vector<double> ln, v;
  for (std::size_t i = 0; i < n_in.size(); ++i)
    if (n_in[i] >= 1) ln.push_back(std::log(static_cast<double>(n_in[i]))), v.push_back(v_in[i]);
  TrendFit f;
  f.sup = *std::max_element(v_in.begin(), v_in.end());
  f.last = v_in.back();
  const std::size_t m = v.size();
  if (m < 6) return f;

  const std::size_t h = m / 2;
  const std::vector<double> lnl(ln.begin() + static_cast<long>(h), ln.end()), vl(v.begin() + static_cast<long>(h), v.end());
  {
    const LineFit lf = fit_line(lnl, vl);
    f.log_slope = lf.slope, f.r2_log = lf.r2;
    std::vector<double> x2, y2;
    for (std::size_t i = h; i < m; ++i)
      if (ln[i] > 0.0) x2.push_back(std::log(ln[i])), y2.push_back(v[i]);
    f.r2_loglog = fit_line(x2, y2).r2;
    std::vector<double> xl, yl;
    for (std::size_t i = h; i < m; ++i)
      if (v[i] > 0.0) xl.push_back(ln[i]), yl.push_back(std::log(v[i]));
    f.exponent_fit = fit_line(xl, yl).slope;
  }

  const double vmax = *std::max_element(v.begin(), v.end()), vmin = *std::min_element(v.begin(), v.end());
  const double scale = std::max(std::abs(vmax), std::abs(vmin));
  const double late_spread = *std::max_element(vl.begin(), vl.end()) - *std::min_element(vl.begin(), vl.end());
  if (scale == 0.0 || vmax - vmin <= 1e-12 * scale || late_spread <= 1e-9 * scale) return f;

  // decade rule
  const double lo = ln.front(), hi = ln.back();
  double first = 0, last = 0;
  int nf = 0, nl = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (ln[i] <= lo + std::log(10.0)) first += v[i], ++nf;
    if (ln[i] >= hi - std::log(10.0)) last += v[i], ++nl;
  }
  if (nf && nl && hi - lo > std::log(10.0) && last / nl < 0.1 * (first / nf) && f.exponent_fit < -0.1) {
    f.kind = TrendKind::DecaysToZero;
    return f;
  }

  // increments per unit log n over the late half
  std::vector<double> xd, yd;
  std::size_t considered = 0;
  for (std::size_t i = h; i + 1 < m; ++i) {
    const double dl = ln[i + 1] - ln[i];
    if (dl <= 0.0) continue;
    ++considered;
    const double D = (v[i + 1] - v[i]) / dl;
    if (D > 1e-14 * scale) xd.push_back(0.5 * (ln[i] + ln[i + 1])), yd.push_back(std::log(D));
  }
  if (xd.size() < 3 || 2 * xd.size() < considered) return f;  // mostly nonincreasing
  f.growth_gamma = fit_line(xd, yd).slope;
  if (f.growth_gamma < -0.05)
    f.kind = TrendKind::Bounded;
  else if (f.growth_gamma <= 0.05)
    f.kind = TrendKind::LogGrowth;
  else
    f.kind = TrendKind::PowerGrowth;
  return f;
}

std::vector<TrendTable> ErgodicProbe::tables() const {
  std::vector<TrendTable> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    TrendTable t{"cesaro_vector_" + std::to_string(i), {}};
    for (std::size_t j = 0; j < n_grid.size(); ++j) t.rows.emplace_back(static_cast<double>(n_grid[j]), samples[i][j]);
    out.push_back(std::move(t));
  }
  return out;
}

json ErgodicProbe::to_json() const {
  json per = json::array();
  for (const auto& t : trends) per.push_back(t.to_json());
  return {{"a", a}, {"p", p}, {"n_max", n_grid.empty() ? 0 : n_grid.back()}, {"grid_points", n_grid.size()},
          {"diagonal", diagonal}, {"trend", trend_name(worst.kind)}, {"worst", worst.to_json()}, {"per_vector", per}};
}

ErgodicProbe cesaro_probe(const Matrix& T, const std::vector<Vector>& xs, double a, double p,
                          const std::vector<std::size_t>& n_grid) {
  if (T.rows() != T.cols() || T.rows() == 0) throw Error(Errc::invalid_argument, "T must be square");
  return cesaro_probe(to_sparse(T), xs, a, p, n_grid);
}

ErgodicProbe cesaro_probe(const SparseMatrix& T, const std::vector<Vector>& xs, double a, double p,
                          const std::vector<std::size_t>& n_grid) {
  check_probe_args(a, p, n_grid);
  if (T.rows() != T.cols() || T.rows() == 0) throw Error(Errc::invalid_argument, "T must be square");
  if (xs.empty()) throw Error(Errc::invalid_argument, "probe set must be nonempty");
  const std::size_t n_max = n_grid.back();
  const auto ka = cesaro_table(a, n_max), kb = cesaro_table(a + 1.0, n_max);
  const ColSparse S(T);

  ErgodicProbe pr;
  pr.a = a, pr.p = p, pr.n_grid = n_grid;
  for (const auto& x : xs) {
    if (x.size() != T.rows()) throw Error(Errc::invalid_argument, "probe vector dimension mismatch");
    const auto norms = power_norms(S, x, n_max, p);
    std::vector<double> row;
    row.reserve(n_grid.size());
    for (std::size_t n : n_grid) row.push_back(cesaro_value(norms, ka, kb, n));
    pr.trends.push_back(classify_trend(n_grid, row));
    pr.samples.push_back(std::move(row));
  }
  pr.worst = worst_of(pr.trends);
  return pr;
}

ErgodicProbe cesaro_probe_diagonal(const Matrix& T, double a, double p, const std::vector<std::size_t>& n_grid) {
  return cesaro_probe_diagonal(to_sparse(T), a, p, n_grid);
}

ErgodicProbe cesaro_probe_diagonal(const SparseMatrix& T, double a, double p, const std::vector<std::size_t>& n_grid) {
  check_probe_args(a, p, n_grid);
  const auto d = static_cast<std::size_t>(T.rows());
  if (n_grid.back() >= d)
    throw Error(Errc::invalid_argument, "diagonal probe needs n < dim T", {{"n_max", n_grid.back()}, {"d", d}});
  const std::size_t n_max = n_grid.back();
  const auto ka = cesaro_table(a, n_max), kb = cesaro_table(a + 1.0, n_max);
  const ColSparse S(T);

  ErgodicProbe pr;
  pr.a = a, pr.p = p, pr.n_grid = n_grid, pr.diagonal = true;
  std::vector<double> row;
  for (std::size_t n : n_grid) {
    Eigen::SparseVector<cd> x(static_cast<Eigen::Index>(d));
    x.insert(static_cast<Eigen::Index>(n)) = 1.0;
    std::vector<double> norms(n + 1, 0.0);
    for (std::size_t j = 0; j <= n; ++j) {
      const double nx = x.norm();
      norms[j] = p == 2.0 ? nx * nx : std::pow(nx, p);
      if (nx == 0.0) break;
      if (j < n) {
        Eigen::SparseVector<cd> y = S * x;
        x = std::move(y);
      }
    }
    row.push_back(cesaro_value(norms, ka, kb, n));
  }
  pr.trends.push_back(classify_trend(n_grid, row));
  pr.samples.push_back(std::move(row));
  pr.worst = pr.trends.front();
  return pr;
}

json OracleResult::to_json() const { return {{"bounded", bounded}, {"value", value}, {"threshold", threshold}}; }

OracleResult shift_threshold_oracle(double s, double x, double q, OracleKind kind) {
  OracleResult r;
  auto unsupported = [&](const char* why) {
    return Error(Errc::unsupported_regime, why, {{"s", s}, {"x", x}, {"q", q}});
  };
  if (!std::isfinite(s) || !std::isfinite(x)) throw unsupported("parameters must be finite");
  switch (kind) {
    case OracleKind::Quadratic712:
      if (!(s > 0.0 && s < 1.0) || !(x > 0.0)) throw unsupported("needs 0 < s < 1 and a > 0");
      r.threshold = 1.0 - s;
      r.bounded = x > r.threshold;
      return r;
    case OracleKind::General714:
      if (!(s > 0.0 && s < 1.0) || !(q >= 1.0 && q <= 2.0) || !(x > 0.0))
        throw unsupported("needs 0 < s < 1, 1 <= q <= 2 and b > 0");
      r.threshold = q * (1.0 - s) / 2.0;
      r.bounded = x > r.threshold;
      return r;
    case OracleKind::Membership74:
      if (!(s > 0.0) || !(x > 0.0)) throw unsupported("needs a, s > 0");
      r.threshold = s;
      r.bounded = x <= s;
      return r;
    case OracleKind::Norm: {
      if (!(s > 0.0) || x < 0.0 || std::floor(x) != x) throw unsupported("needs s > 0 and integer m >= 0");
      const double km = cesaro_number(s, static_cast<std::size_t>(x));
      r.value = s < 1.0 ? 1.0 / km : km;
      r.bounded = true;
      return r;
    }
  }
  throw unsupported("unknown oracle kind");
}

json TrichotomyReport::to_json() const {
  json rs = json::array();
  for (const auto& r : rows)
    rs.push_back({{"norm2", r.norm2},
                  {"min_power_norm2", r.min_power_norm2},
                  {"cesaro_limit", r.cesaro_limit},
                  {"W_norm2", r.W_norm2},
                  {"S_present", r.S_present},
                  {"consistent", r.consistent}});
  return {{"b", b}, {"n_max", n_max}, {"tol", tol}, {"verdict", verdict_name(verdict)}, {"vectors", rs}};
}

TrichotomyReport trichotomy_test(const Matrix& T, const ModelBundle& bundle, const std::vector<Vector>& xs,
                                 std::size_t n_max, double b, double tol) {
  if (xs.empty()) throw Error(Errc::invalid_argument, "probe set must be nonempty");
  if (bundle.W.rows() != T.rows()) throw Error(Errc::invalid_argument, "bundle does not match T");
  if (!(b > 0.0)) throw Error(Errc::invalid_argument, "b must be positive");
  const ColSparse S = sparse_of(T);
  const auto ka = cesaro_table(b, n_max), kb = cesaro_table(b + 1.0, n_max);
  TrichotomyReport rep;
  rep.b = b, rep.n_max = n_max, rep.tol = tol;
  bool all = true;
  for (const auto& x : xs) {
    TrichotomyRow r;
    r.norm2 = x.squaredNorm();
    const auto norms = power_norms(S, x, n_max, 2.0);
    r.min_power_norm2 = *std::min_element(norms.begin(), norms.end());
    r.cesaro_limit = cesaro_value(norms, ka, kb, n_max);
    r.W_norm2 = (bundle.W * x).squaredNorm();
    const double band = tol * r.norm2;
    r.consistent = std::abs(r.min_power_norm2 - r.cesaro_limit) <= band &&
                   std::abs(r.min_power_norm2 - r.W_norm2) <= band && std::abs(r.cesaro_limit - r.W_norm2) <= band;
    r.S_present = r.W_norm2 > 1e-6 * r.norm2;
    all = all && r.consistent;
    rep.rows.push_back(r);
  }
  rep.verdict = all ? Verdict::TrendHolds : Verdict::TrendFails;
  return rep;
}

json ImplicationReport::to_json() const {
  json rs = json::array();
  for (const auto& r : rows)
    rs.push_back({{"a", r.c.a}, {"p", r.c.p}, {"b", r.c.b}, {"q", r.c.q},
                  {"antecedent", trend_name(r.antecedent)}, {"consequent", trend_name(r.consequent)},
                  {"vacuous", r.vacuous}, {"violated", r.violated}});
  return {{"verdict", verdict_name(verdict)}, {"cases", rs}};
}

ImplicationReport implication_battery(const SparseMatrix& T, const std::vector<ImplicationCase>& cases,
                                      const std::vector<Vector>& xs, const std::vector<std::size_t>& n_grid) {
  if (cases.empty()) throw Error(Errc::invalid_argument, "no implication cases");
  ImplicationReport rep;
  bool any_violation = false;
  for (const auto& c : cases) {
    const ErgodicProbe ante = cesaro_probe(T, xs, c.a, c.p, n_grid);
    const ErgodicProbe cons = cesaro_probe(T, xs, c.b, c.q, n_grid);
    ImplicationRow row;
    row.c = c;
    row.antecedent = ante.worst.kind;
    row.consequent = cons.worst.kind;
    bool any_antecedent = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!trend_bounded(ante.trends[i].kind)) continue;
      any_antecedent = true;
      if (!trend_bounded(cons.trends[i].kind)) row.violated = true;
    }
    row.vacuous = !any_antecedent;
    any_violation = any_violation || row.violated;
    rep.rows.push_back(row);
  }
  rep.verdict = any_violation ? Verdict::TrendFails : Verdict::TrendHolds;
  return rep;
}

namespace {

// M^b_T(n) at each n of a sorted grid.
std::vector<Matrix> operator_means_at(const Matrix& T, double b, const std::vector<std::size_t>& grid) {
  const Eigen::Index d = T.rows();
  const std::size_t n_max = grid.back();
  std::vector<Matrix> out;
  if (b == 1.0) {
    Matrix P = Matrix::Identity(d, d), S = Matrix::Zero(d, d);
    std::size_t gi = 0;
    for (std::size_t n = 0; n <= n_max; ++n) {
      S += P;
      if (n == grid[gi]) {
        out.push_back(S / static_cast<double>(n + 1));
        ++gi;
      }
      P = T * P;
    }
    return out;
  }
  if (static_cast<double>(d) * static_cast<double>(d) * static_cast<double>(n_max + 1) > 5e7)
    throw Error(Errc::invalid_argument, "operator means for b != 1 keep all powers; d^2 n_max too large");
  const auto kb = cesaro_table(b, n_max), kb1 = cesaro_table(b + 1.0, n_max);
  std::vector<Matrix> powers;
  powers.reserve(n_max + 1);
  powers.push_back(Matrix::Identity(d, d));
  for (std::size_t n = 1; n <= n_max; ++n) powers.push_back(T * powers.back());
  for (std::size_t n : grid) {
    Matrix S = Matrix::Zero(d, d);
    for (std::size_t j = 0; j <= n; ++j) S += kb[n - j] * powers[j];
    out.push_back(S / kb1[n]);
  }
  return out;
}

Matrix projector_onto(const Matrix& cols) {
  if (cols.cols() == 0) return Matrix::Zero(cols.rows(), cols.rows());
  return cols * cols.adjoint();
}

}  // namespace

OperatorMeans cesaro_operator_means(const Matrix& T, double b, const std::vector<std::size_t>& n_grid) {
  check_probe_args(b, 1.0, n_grid);
  if (T.rows() != T.cols() || T.rows() == 0) throw Error(Errc::invalid_argument, "T must be square");
  OperatorMeans out;
  out.n = n_grid;
  const auto means = operator_means_at(T, b, n_grid);
  for (const auto& M : means) out.mean_norm.push_back(operator_norm(M));
  Matrix P = Matrix::Identity(T.rows(), T.cols());
  std::size_t gi = 0;
  for (std::size_t n = 0; n <= n_grid.back(); ++n) {
    if (n == n_grid[gi]) {
      out.power_norm.push_back(operator_norm(P));
      ++gi;
    }
    P = T * P;
  }
  out.last_mean = means.back();
  return out;
}

json ErgodicProjection::to_json() const {
  return {{"cauchy_residual", cauchy_residual},
          {"idempotence_residual", idempotence_residual},
          {"kernel_range_residual", kernel_range_residual},
          {"range_kernel_residual", range_kernel_residual},
          {"fixed_dim", fixed_dim}};
}

ErgodicProjection mean_ergodic_projection(const Matrix& T, double b, std::size_t n_max, double tol, double rank_tol) {
  if (T.rows() != T.cols() || T.rows() == 0) throw Error(Errc::invalid_argument, "T must be square");
  if (n_max < 8) throw Error(Errc::invalid_argument, "n_max must be >= 8");
  if (!(b > 0.0)) throw Error(Errc::invalid_argument, "b must be positive");
  std::vector<std::size_t> grid{n_max / 2, n_max / 2 + 1, 3 * n_max / 4, n_max - 1, n_max};
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const auto means = operator_means_at(T, b, grid);

  ErgodicProjection out;
  out.P = means.back();
  for (std::size_t i = 0; i + 1 < means.size(); ++i)
    out.cauchy_residual = std::max(out.cauchy_residual, operator_norm(out.P - means[i]));
  if (out.cauchy_residual > tol)
    throw Error(Errc::not_converged, "Cesaro means are not Cauchy at n_max",
                {{"cauchy_residual", out.cauchy_residual}, {"tol", tol}, {"n_max", n_max}, {"b", b}});

  const Eigen::Index d = T.rows();
  out.idempotence_residual = operator_norm(out.P * out.P - out.P);
  Eigen::BDCSVD<Matrix> s1(Matrix::Identity(d, d) - T, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::BDCSVD<Matrix> s2(out.P, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Index r1 = 0, r2 = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (s1.singularValues()(i) > rank_tol) ++r1;
    if (s2.singularValues()(i) > 0.5) ++r2;  // nonzero singular values of a projection are >= 1
  }
  const Matrix ker_IT = s1.matrixV().rightCols(d - r1), ran_IT = s1.matrixU().leftCols(r1);
  const Matrix ran_P = s2.matrixU().leftCols(r2), ker_P = s2.matrixV().rightCols(d - r2);
  out.fixed_dim = static_cast<std::size_t>(d - r1);
  out.kernel_range_residual = operator_norm(projector_onto(ker_IT) - projector_onto(ran_P));
  out.range_kernel_residual = operator_norm(projector_onto(ran_IT) - projector_onto(ker_P));
  return out;
}

}  // namespace hered
