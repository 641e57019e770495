#include "hered/operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hered/error.hpp"

namespace hered {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_square(const Matrix& T, const char* what) {
  if (T.rows() == 0 || T.rows() != T.cols())
    throw Error(Errc::invalid_argument, std::string(what) + " must be a nonempty square matrix",
                {{"rows", T.rows()}, {"cols", T.cols()}});
}

std::optional<std::size_t> finite_degree(const Generator& g) {
  if (g.kind == Generator::Kind::Polynomial || g.kind == Generator::Kind::FileList) return g.degree;
  if (g.kind == Generator::Kind::Binomial && g.exponent >= 0.0 && std::floor(g.exponent) == g.exponent)
    return static_cast<std::size_t>(g.exponent);
  return std::nullopt;
}

}  // namespace

DenseOperator::DenseOperator(Matrix m, std::string labels) : m_(std::move(m)), labels_(std::move(labels)) {
  require_square(m_, "operator");
  if (!m_.allFinite()) throw Error(Errc::invalid_argument, "operator entries must be finite");
}

SparseMatrix ShiftSection::sparse() const { return to_sparse(op.matrix()); }

Matrix ShiftSection::weighted_matrix() const {
  const Eigen::Index d = op.dim();
  Matrix W = op.matrix();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      W(i, j) *= std::sqrt(weights[static_cast<std::size_t>(j)] / weights[static_cast<std::size_t>(i)]);
  return W;
}

ShiftSection shift_section(const TruncatedSeries& kappa, Direction dir, std::size_t d) {
  if (d < 1 || d > kappa.trunc_len())
    throw Error(Errc::invalid_argument, "section dimension must satisfy 1 <= d <= trunc_len",
                {{"d", d}, {"trunc_len", kappa.trunc_len()}});
  for (std::size_t n = 0; n < d; ++n)
    if (!(kappa[n] > 0.0)) throw Error(Errc::invalid_argument, "shift weights must be positive", {{"index", n}});

  ShiftSection s;
  s.direction = dir;
  s.is_part = dir == Direction::Backward;
  s.weights.assign(kappa.coeffs().begin(), kappa.coeffs().begin() + static_cast<long>(d));
  const auto D = static_cast<Eigen::Index>(d);
  Matrix M = Matrix::Zero(D, D);
  for (Eigen::Index i = 0; i + 1 < D; ++i) {
    const double ki = s.weights[static_cast<std::size_t>(i)], kn = s.weights[static_cast<std::size_t>(i + 1)];
    if (dir == Direction::Backward)
      M(i, i + 1) = std::sqrt(ki / kn);  // B u_{i+1} = sqrt(kappa_i / kappa_{i+1}) u_i
    else
      M(i + 1, i) = std::sqrt(kn / ki);  // F u_i = sqrt(kappa_{i+1} / kappa_i) u_{i+1}
  }
  s.op = DenseOperator(std::move(M), dir == Direction::Backward
                                         ? "backward section on u_0..u_{d-1}, exact part"
                                         : "forward section on u_0..u_{d-1}, compression (not a part)");
  return s;
}

SparseMatrix shift_section_sparse(const TruncatedSeries& kappa, Direction dir, std::size_t d) {
  if (d < 1 || d > kappa.trunc_len())
    throw Error(Errc::invalid_argument, "section dimension must satisfy 1 <= d <= trunc_len",
                {{"d", d}, {"trunc_len", kappa.trunc_len()}});
  std::vector<Eigen::Triplet<cd>> trip;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    const double ki = kappa[i], kn = kappa[i + 1];
    if (!(ki > 0.0) || !(kn > 0.0)) throw Error(Errc::invalid_argument, "shift weights must be positive", {{"index", i}});
    const auto r = static_cast<Eigen::Index>(i);
    if (dir == Direction::Backward)
      trip.emplace_back(r, r + 1, std::sqrt(ki / kn));
    else
      trip.emplace_back(r + 1, r, std::sqrt(kn / ki));
  }
  const auto D = static_cast<Eigen::Index>(d);
  SparseMatrix S(D, D);
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

double operator_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  if (A.rows() == 1 || A.cols() == 1) return A.norm();
  Eigen::BDCSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

double spectral_radius_eig(const Matrix& T) {
  require_square(T, "operator");
  Eigen::ComplexEigenSolver<Matrix> es(T, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius_gelfand(const Matrix& T) {
  require_square(T, "operator");
  double nB = operator_norm(T);
  if (nB == 0.0) return 0.0;
  Matrix B = T / nB;
  double log_norm = std::log(nB);  // log ||T^{2^k}||
  double est = nB;
  double power = 1.0;
  // a nilpotent T keeps ||T^{2^k}|| flat until 2^k reaches d
  const int min_steps = static_cast<int>(std::ceil(std::log2(static_cast<double>(T.rows())))) + 1;
  for (int k = 1; k <= 60; ++k) {
    Matrix C = B * B;
    const double c = operator_norm(C);
    if (c == 0.0) return 0.0;
    log_norm = 2.0 * log_norm + std::log(c);
    power *= 2.0;
    B = C / c;
    const double next = std::exp(log_norm / power);
    if (k >= min_steps && std::abs(next - est) <= 1e-8 * next) return next;
    est = next;
  }
  return est;
}

double spectral_radius(const Matrix& T) {
  return T.rows() <= 512 ? spectral_radius_eig(T) : spectral_radius_gelfand(T);
}

double hermitian_asymmetry(const Matrix& A) {
  const double n = A.norm();
  return (A - A.adjoint()).norm() / std::max(1.0, n);
}

double min_eigenvalue(const Matrix& A) {
  require_square(A, "matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_psd(const Matrix& A, double tol) {
  require_square(A, "matrix");
  if (hermitian_asymmetry(A) > 1e-10) throw Error(Errc::invalid_argument, "is_psd needs a Hermitian matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return ev(0) >= -tol * scale;
}

Matrix hermitian_sqrt(const Matrix& A, double tol) {
  require_square(A, "matrix");
  if (hermitian_asymmetry(A) > 1e-10)
    throw Error(Errc::invalid_argument, "hermitian_sqrt needs a Hermitian matrix",
                {{"asymmetry", hermitian_asymmetry(A)}});
  const Matrix H = (A + A.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  if (ev(0) < -tol * scale)
    throw Error(Errc::not_psd, "matrix has a negative eigenvalue below tolerance",
                {{"min_eigenvalue", ev(0)}, {"threshold", -tol * scale}});
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::sqrt(std::max(0.0, ev(i)));
  const Matrix& V = es.eigenvectors();
  return V * ev.cast<cd>().asDiagonal() * V.adjoint();
}

Matrix direct_sum(const Matrix& A, const Matrix& B) {
  Matrix S = Matrix::Zero(A.rows() + B.rows(), A.cols() + B.cols());
  S.topLeftCorner(A.rows(), A.cols()) = A;
  S.bottomRightCorner(B.rows(), B.cols()) = B;
  return S;
}

SparseMatrix to_sparse(const Matrix& A) {
  std::vector<Eigen::Triplet<cd>> trip;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      if (A(i, j) != cd(0.0, 0.0)) trip.emplace_back(i, j, A(i, j));
  SparseMatrix S(A.rows(), A.cols());
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::ExactNilpotent: return "ExactNilpotent";
    case Policy::ExactPolynomial: return "ExactPolynomial";
    case Policy::ExactStationary: return "ExactStationary";
    case Policy::GeometricTail: return "GeometricTail";
    case Policy::Truncated: return "Truncated";
  }
  return "Truncated";
}

json HereditaryResult::to_json() const {
  json j = {{"policy", policy_name(policy)}, {"rho_est", rho_est},   {"M", M},
            {"tail_bound", tail_bound},      {"abs_finite", abs_finite}, {"asymmetry", asymmetry}};
  if (!warning.empty()) j["warning"] = warning;
  return j;
}

HereditaryResult hereditary_apply(const TruncatedSeries& alpha, const Matrix& T, double tol, std::size_t n_cap) {
  require_square(T, "operator");
  if (!(tol > 0.0)) throw Error(Errc::invalid_argument, "tol must be positive");
  if (n_cap < 1) throw Error(Errc::invalid_argument, "n_cap must be >= 1");

  const Eigen::Index d = T.rows();
  const std::size_t N = alpha.N();
  const auto degree = finite_degree(alpha.generator());
  const ValueAtOne a1 = alpha_at_one(alpha);
  const WienerNorm wn = wiener_norm(alpha);

  HereditaryResult r;
  r.rho_est = spectral_radius(T);
  const bool geometric = r.rho_est < 1.0 - 10.0 * tol;

  // ||T^n||^2 <= K eta^n from a power q with ||T^q|| < 1.
  double K = 0.0, eta = 0.0;
  bool have_bound = false, bound_tried = false;
  auto setup_bound = [&]() {
    bound_tried = true;
    Matrix Q = T;
    double C_T = 1.0;
    for (std::size_t q = 1; q <= std::max<std::size_t>(n_cap, 1); ++q) {
      const double theta = operator_norm(Q);
      if (theta == 0.0) return;  // nilpotent: the exact branch terminates the sum
      if (theta < 1.0) {
        K = C_T * C_T / (theta * theta);
        eta = std::pow(theta, 2.0 / static_cast<double>(q));
        have_bound = true;
        return;
      }
      C_T = std::max(C_T, theta);
      Q = T * Q;
    }
  };

  Matrix P = Matrix::Identity(d, d);
  Matrix G_prev;
  Matrix value = Matrix::Zero(d, d), absv = Matrix::Zero(d, d);
  long double S = 0.0L, Sabs = 0.0L;

  for (std::size_t m = 0;; ++m) {
    if (P.norm() <= 1e-300) {
      r.policy = Policy::ExactNilpotent;
      r.M = m == 0 ? 0 : m - 1;
      break;
    }
    Matrix G = P.adjoint() * P;
    if (m >= 1 && (G - G_prev).norm() <= 1e-13 * std::max(1.0, G.norm())) {
      // T*^n T^n is constant from m-1 on; the remainder is (alpha(1) - S) G.
      if (a1.certified && a1.uncertainty <= tol) {
        value += static_cast<double>(static_cast<long double>(a1.estimate) - S) * G_prev;
        if (wn.summable()) {
          absv += static_cast<double>(static_cast<long double>(wn.value + wn.tail_bound) - Sabs) * G_prev;
        } else if (G_prev.norm() > 0.0) {
          r.abs_finite = false;
        }
        r.policy = Policy::ExactStationary;
        r.M = m - 1;
        r.tail_bound = a1.uncertainty * G_prev.norm();
        break;
      }
    }

    double c;
    if (m <= N) {
      c = alpha[m];
    } else if (alpha.generator().closed_form()) {
      c = alpha.coefficient(m);
    } else {
      r.policy = Policy::Truncated;
      r.M = m - 1;
      r.tail_bound = kInf;
      r.warning = "alpha coefficients exhausted at N; series truncated";
      break;
    }
    value += c * G;
    absv += std::abs(c) * G;
    S += c;
    Sabs += std::abs(c);

    if (degree && m >= *degree) {
      r.policy = Policy::ExactPolynomial;
      r.M = m;
      break;
    }
    if (geometric) {
      if (!bound_tried) setup_bound();
      if (have_bound) {
        const TailBound tb = geometric_tail(alpha, std::min(m, N), eta);
        if (tb.known && K * tb.bound <= tol) {
          r.policy = Policy::GeometricTail;
          r.M = m;
          r.tail_bound = K * tb.bound;
          break;
        }
        if (!tb.known && m >= N) {
          r.policy = Policy::Truncated;
          r.M = m;
          r.tail_bound = kInf;
          r.warning = "alpha tail beyond N is unknown; geometric bound not certified";
          break;
        }
      }
      if (m >= n_cap) {
        throw Error(Errc::convergence_not_certified, "n_cap reached before the tail bound met tol",
                    {{"M", m}, {"partial_value_norm", value.norm()}, {"rho_est", r.rho_est}});
      }
    } else if (m >= std::min(N, n_cap)) {
      r.policy = Policy::Truncated;
      r.M = m;
      r.tail_bound = kInf;
      r.warning = "spectral radius estimate >= 1 - 10 tol; series truncated at M";
      break;
    }
    G_prev = std::move(G);
    P = T * P;
  }

  r.asymmetry = hermitian_asymmetry(value);
  if (r.asymmetry > 1e-8)
    throw Error(Errc::invalid_argument, "hereditary sum lost Hermitian symmetry", {{"asymmetry", r.asymmetry}});
  r.value = (value + value.adjoint()) / 2.0;
  r.abs_value = (absv + absv.adjoint()) / 2.0;
  return r;
}

json MembershipReport::to_json() const {
  return {{"in_Cw", verdict_name(in_Cw)},
          {"in_Cw_plus", verdict_name(in_Cw_plus)},
          {"sup_partial_norm", sup_partial_norm},
          {"min_eigenvalue", min_eigenvalue},
          {"hereditary", hereditary.to_json()}};
}

MembershipReport class_membership(const TruncatedSeries& alpha, const Matrix& T, const std::vector<Vector>& probes,
                                  double tol) {
  require_square(T, "operator");
  if (probes.empty()) throw Error(Errc::invalid_argument, "probe set must be nonempty");
  for (const auto& x : probes)
    if (x.size() != T.rows() || std::abs(x.norm() - 1.0) > 1e-8)
      throw Error(Errc::invalid_argument, "probe vectors must be unit vectors of matching dimension");

  MembershipReport rep;
  rep.hereditary = hereditary_apply(alpha, T, 1e-12);
  const auto& h = rep.hereditary;
  rep.min_eigenvalue = min_eigenvalue(h.value);
  const double scale = operator_norm(h.value);
  const bool psd = rep.min_eigenvalue >= -tol * scale;
  rep.sup_partial_norm = h.abs_finite ? operator_norm(h.abs_value) : kInf;

  if (h.policy != Policy::Truncated) {
    rep.in_Cw = h.abs_finite ? Verdict::Holds : Verdict::Fails;
    rep.in_Cw_plus = rep.in_Cw == Verdict::Fails ? Verdict::Fails : (psd ? Verdict::Holds : Verdict::Fails);
    return rep;
  }
  // Truncated: watch the per-probe partial sums of |alpha_n| ||T^n x||^2.
  const std::size_t M = h.M;
  double growth = 0.0;
  for (const auto& x0 : probes) {
    Vector x = x0;
    long double half = 0.0L, full = 0.0L;
    for (std::size_t n = 0; n <= M; ++n) {
      full += std::abs(alpha.coefficient(n)) * x.squaredNorm();
      if (n == M / 2) half = full;
      x = T * x;
    }
    if (full > 0.0L) growth = std::max(growth, static_cast<double>((full - half) / full));
  }
  rep.in_Cw = growth <= 1e-2 ? Verdict::TrendHolds : Verdict::TrendFails;
  rep.in_Cw_plus = is_pass(rep.in_Cw) && psd ? Verdict::TrendHolds : Verdict::TrendFails;
  return rep;
}

json ShiftMembership::to_json() const {
  json j = {{"cond_i", verdict_name(cond_i)},
            {"cond_ii", verdict_name(cond_ii)},
            {"verdict", verdict_name(verdict)},
            {"is_part", is_part},
            {"witness", witness}};
  if (!tables.empty()) {
    json t = json::array();
    for (const auto& tab : tables) t.push_back(hered::to_json(tab));
    j["trend_tables"] = t;
  }
  return j;
}

namespace {

// Finite sup when the sequence is flat over its second half, or when its increments
// per unit log n decay like a negative power (slope of log increment < -0.05).
Verdict sup_trend(const std::vector<double>& v, double& sup_out, std::size_t& arg_out) {
  double all = -kInf, half = -kInf;
  for (std::size_t n = 0; n < v.size(); ++n) {
    if (v[n] > all) all = v[n], arg_out = n;
    if (n <= (v.size() - 1) / 2) half = std::max(half, v[n]);
  }
  sup_out = all;
  if (all <= (1.0 + 1e-9) * half) return Verdict::TrendHolds;
  if (v.size() < 64) return Verdict::TrendFails;

  std::vector<std::size_t> grid{1};
  for (double x = 1.0; x < static_cast<double>(v.size() - 1);) {
    x *= std::pow(10.0, 1.0 / 12.0);
    const auto n = std::min(static_cast<std::size_t>(std::llround(x)), v.size() - 1);
    if (n > grid.back()) grid.push_back(n);
  }
  std::vector<double> xs, ys;
  std::size_t considered = 0;
  for (std::size_t i = grid.size() / 2; i + 1 < grid.size(); ++i) {
    const double l0 = std::log(static_cast<double>(grid[i])), l1 = std::log(static_cast<double>(grid[i + 1]));
    const double D = (v[grid[i + 1]] - v[grid[i]]) / (l1 - l0);
    ++considered;
    if (D > 1e-14 * std::abs(all)) xs.push_back(0.5 * (l0 + l1)), ys.push_back(std::log(D));
  }
  if (2 * xs.size() < considered) return Verdict::TrendHolds;
  if (xs.size() < 3) return Verdict::TrendFails;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= static_cast<double>(xs.size()), my /= static_cast<double>(xs.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxx += (xs[i] - mx) * (xs[i] - mx), sxy += (xs[i] - mx) * (ys[i] - my);
  return sxy / sxx < -0.05 ? Verdict::TrendHolds : Verdict::TrendFails;
}

Verdict combine(Verdict i, Verdict ii) {
  if (is_fail(ii) || is_fail(i)) return ii == Verdict::Fails || i == Verdict::Fails ? Verdict::Fails : Verdict::TrendFails;
  if (ii == Verdict::Indeterminate || i == Verdict::Indeterminate) return Verdict::Indeterminate;
  if (ii == Verdict::Holds && i == Verdict::Holds) return Verdict::Holds;
  return Verdict::TrendHolds;
}

TrendTable table_of(std::string name, const std::vector<double>& v) {
  TrendTable t{std::move(name), {}};
  const std::size_t step = std::max<std::size_t>(1, v.size() / 256);
  for (std::size_t n = 0; n < v.size(); n += step) t.rows.emplace_back(static_cast<double>(n), v[n]);
  if ((v.size() - 1) % step != 0) t.rows.emplace_back(static_cast<double>(v.size() - 1), v.back());
  return t;
}

void check_ratio_bounded(const std::vector<double>& ratio, const char* which) {
  double all = 0.0, half = 0.0;
  for (std::size_t n = 0; n < ratio.size(); ++n) {
    if (!std::isfinite(ratio[n])) throw Error(Errc::unbounded_shift, std::string(which) + " weight ratio not finite");
    all = std::max(all, ratio[n]);
    if (n <= ratio.size() / 2) half = std::max(half, ratio[n]);
  }
  if (all > 1.1 * half)
    throw Error(Errc::unbounded_shift, std::string(which) + " weight ratios keep growing",
                {{"sup_first_half", half}, {"sup_all", all}});
}

}  // namespace

ShiftMembership shift_membership_backward(const TruncatedSeries& alpha_in, const TruncatedSeries& kappa_in) {
  const std::size_t len = std::min(alpha_in.trunc_len(), kappa_in.trunc_len());
  if (len < 4) throw Error(Errc::invalid_argument, "need at least 4 coefficients");
  const TruncatedSeries alpha = alpha_in.resized(len), kappa = kappa_in.resized(len);
  const std::size_t N = len - 1;
  for (std::size_t n = 0; n <= N; ++n)
    if (!(kappa[n] > 0.0)) throw Error(Errc::invalid_argument, "kappa must be positive", {{"index", n}});

  std::vector<double> ratio(N);
  for (std::size_t n = 0; n < N; ++n) ratio[n] = kappa[n] / kappa[n + 1];
  check_ratio_bounded(ratio, "backward");

  std::vector<double> beta(len);
  for (std::size_t n = 0; n <= N; ++n) beta[n] = std::abs(alpha[n]);
  const TruncatedSeries gamma = cauchy_product(TruncatedSeries(beta), kappa);
  std::vector<double> gk(len);
  for (std::size_t n = 0; n <= N; ++n) gk[n] = gamma[n] / kappa[n];

  ShiftMembership rep;
  rep.is_part = true;
  double sup = 0.0;
  std::size_t arg = 0;
  rep.cond_i = sup_trend(gk, sup, arg);

  const TruncatedSeries prod = cauchy_product(alpha, kappa);
  double mn = kInf;
  std::size_t argmin = 0;
  for (std::size_t n = 0; n <= N; ++n)
    if (prod[n] < mn) mn = prod[n], argmin = n;
  rep.cond_ii = mn >= -1e-14 ? Verdict::Holds : Verdict::Fails;
  rep.verdict = combine(rep.cond_i, rep.cond_ii);
  rep.witness = {{"N", N},
                 {"sup_gamma_over_kappa", sup},
                 {"sup_argmax", arg},
                 {"min_coefficient_alpha_kappa", mn},
                 {"min_index", argmin},
                 {"sign_threshold", 1e-14},
                 {"sup_kappa_ratio", *std::max_element(ratio.begin(), ratio.end())},
                 {"tested_on", "coefficients of the infinite backward shift"}};
  rep.tables.push_back(table_of("gamma_over_kappa", gk));
  rep.tables.push_back(table_of("alpha_times_kappa", prod.coeffs()));
  return rep;
}

ShiftMembership shift_membership_forward(const TruncatedSeries& alpha_in, const TruncatedSeries& kappa_in) {
  const std::size_t len = std::min(alpha_in.trunc_len(), kappa_in.trunc_len());
  if (len < 4) throw Error(Errc::invalid_argument, "need at least 4 coefficients");
  const std::size_t N = len - 1;
  for (std::size_t n = 0; n <= N; ++n)
    if (!(kappa_in[n] > 0.0)) throw Error(Errc::invalid_argument, "kappa must be positive", {{"index", n}});

  std::vector<double> up(N);
  for (std::size_t n = 0; n < N; ++n) up[n] = kappa_in[n + 1] / kappa_in[n];
  check_ratio_bounded(up, "forward");

  const bool extend = alpha_in.generator().closed_form() && kappa_in.generator().closed_form();
  const std::size_t L = extend ? 16 * len : len;
  const TruncatedSeries alpha = alpha_in.resized(L), kappa = kappa_in.resized(L);
  const auto degree = finite_degree(alpha.generator());

  // sum_{n > cut} |alpha_n| for the extended alpha, from its closed form.
  std::vector<long double> prefix(L + 1, 0.0L), abs_prefix(L + 1, 0.0L);
  for (std::size_t n = 0; n < L; ++n) {
    prefix[n + 1] = prefix[n] + alpha[n];
    abs_prefix[n + 1] = abs_prefix[n] + std::abs(alpha[n]);
  }
  auto alpha_abs_tail_after = [&](std::size_t cut) -> double {
    if (degree && cut >= *degree) return 0.0;
    const auto& g = alpha.generator();
    if (g.kind == Generator::Kind::Binomial && g.exponent > 0.0 && static_cast<double>(cut) > g.exponent)
      return std::abs(static_cast<double>(prefix[cut + 1]));
    if (g.kind == Generator::Kind::PowerTail && cut + 1 >= g.from && g.tail_exponent > 1.0)
      return g.amplitude * std::pow(static_cast<double>(cut), 1.0 - g.tail_exponent) / (g.tail_exponent - 1.0);
    return kInf;
  };
  // sup_{j >= L} kappa_j
  double kappa_beyond = kInf;
  if (extend) {
    const auto rb = kappa.ratio_bound_beyond();
    if (rb && *rb <= 1.0) kappa_beyond = kappa[L - 1];
  }

  const std::size_t m_top = N / 2;
  std::vector<double> val(m_top + 1), tail(m_top + 1), bk(m_top + 1);
  for (std::size_t m = 0; m <= m_top; ++m) {
    long double s = 0.0L, sb = 0.0L;
    const std::size_t cut = L - 1 - m;  // last n with m + n inside the table
    for (std::size_t n = 0; n <= cut; ++n) {
      s += static_cast<long double>(alpha[n]) * kappa[m + n];
      sb += static_cast<long double>(std::abs(alpha[n])) * kappa[m + n];
    }
    val[m] = static_cast<double>(s);
    const double at = alpha_abs_tail_after(cut);
    tail[m] = at == 0.0 ? 0.0 : at * kappa_beyond;
    bk[m] = static_cast<double>(sb) / kappa[m];
  }

  ShiftMembership rep;
  rep.is_part = false;
  double sup = 0.0;
  std::size_t arg = 0;
  rep.cond_i = sup_trend(bk, sup, arg);

  std::optional<std::size_t> neg_certain, neg_any;
  bool all_certified = true;
  for (std::size_t m = 0; m <= m_top; ++m) {
    if (!std::isfinite(tail[m])) all_certified = false;
    if (val[m] + tail[m] < -1e-14 && !neg_certain) neg_certain = m;
    if (val[m] < -1e-14 && !neg_any) neg_any = m;
    if (std::isfinite(tail[m]) && val[m] - tail[m] < -1e-14) all_certified = false;
  }
  if (neg_certain)
    rep.cond_ii = Verdict::Fails;
  else if (all_certified)
    rep.cond_ii = Verdict::Holds;
  else
    rep.cond_ii = neg_any ? Verdict::TrendFails : Verdict::TrendHolds;
  rep.verdict = combine(rep.cond_i, rep.cond_ii);

  double max_tail = 0.0;
  for (double t : tail) max_tail = std::max(max_tail, t);
  rep.witness = {{"N", N},
                 {"summation_length", L},
                 {"sup_beta_nabla_kappa_over_kappa", sup},
                 {"sup_argmax", arg},
                 {"min_alpha_nabla_kappa", *std::min_element(val.begin(), val.end())},
                 {"max_tail_bound", max_tail},
                 {"tails_certified", all_certified || neg_certain.has_value()},
                 {"tested_on", "coefficients of the infinite forward shift; sections are compressions, not parts"}};
  if (neg_certain) rep.witness["negative_at_m"] = *neg_certain;
  rep.tables.push_back(table_of("alpha_nabla_kappa", val));
  rep.tables.push_back(table_of("beta_nabla_kappa_over_kappa", bk));
  return rep;
}

namespace {

cd parse_complex_token(const std::string& raw) {
  std::string t;
  for (char c : raw)
    if (c != ' ' && c != '\t' && c != '\r') t += c;
  if (t.empty()) throw Error(Errc::invalid_argument, "empty matrix entry");
  auto to_double = [&](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (...) {
      throw Error(Errc::invalid_argument, "bad matrix entry: " + raw);
    }
    if (used != s.size() || !std::isfinite(v)) throw Error(Errc::invalid_argument, "bad matrix entry: " + raw);
    return v;
  };
  const char last = t.back();
  if (last != 'j' && last != 'i') return {to_double(t), 0.0};
  t.pop_back();
  std::size_t split = std::string::npos;
  for (std::size_t i = t.size(); i-- > 1;)
    if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
      split = i;
      break;
    }
  if (split == std::string::npos) return {0.0, to_double(t)};
  return {to_double(t.substr(0, split)), to_double(t.substr(split))};
}

}  // namespace

Matrix parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<cd>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<cd> row;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) row.push_back(parse_complex_token(tok));
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(Errc::invalid_argument, "ragged matrix CSV", {{"row", rows.size()}});
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::invalid_argument, "matrix CSV is empty");
  Matrix A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return A;
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open matrix file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_matrix_csv(ss.str());
}

std::string matrix_csv(const Matrix& A) {
  std::string out;
  char buf[96];
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g%+.17gj", A(i, j).real(), A(i, j).imag());
      if (j) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace hered
