#include "hered/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "hered/error.hpp"
#include "hered/kernel_analysis.hpp"

namespace hered {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Largest-modulus component made real positive, so bases are reproducible.
void normalize_phases(Matrix& Q) {
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    Eigen::Index i;
    Q.col(j).cwiseAbs().maxCoeff(&i);
    const cd z = Q(i, j);
    if (std::abs(z) > 0.0) Q.col(j) *= std::conj(z) / std::abs(z);
  }
}

double kernel_coefficient(const TruncatedSeries& k, std::size_t n) {
  if (n <= k.N()) return k[n];
  if (k.generator().closed_form()) return k.coefficient(n);
  throw Error(Errc::tail_uncertifiable, "kernel coefficients unknown beyond N", {{"index", n}, {"N", k.N()}});
}

// ||T^n||^2 <= K eta^n from the first power with norm below one.
struct PowerBound {
  bool ok = false;
  double K = 0.0, eta = 0.0;
};

PowerBound power_bound(const Matrix& T) {
  PowerBound b;
  if (spectral_radius(T) >= 1.0 - 1e-12) return b;
  Matrix Q = T;
  double C_T = 1.0;
  for (std::size_t q = 1; q <= 4096; ++q) {
    const double theta = operator_norm(Q);
    if (theta == 0.0) return b;  // nilpotent: exactness ends the sum instead
    if (theta < 1.0) {
      b.ok = true;
      b.K = C_T * C_T / (theta * theta);
      b.eta = std::pow(theta, 2.0 / static_cast<double>(q));
      return b;
    }
    C_T = std::max(C_T, theta);
    Q = T * Q;
  }
  return b;
}

}  // namespace

DefectResult build_defect(const TruncatedSeries& alpha, const Matrix& T, double rank_tol, double psd_tol) {
  DefectResult out;
  out.hereditary = hereditary_apply(alpha, T);
  const Matrix& H = out.hereditary.value;
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  if (ev(0) < -psd_tol * scale)
    throw Error(Errc::not_psd, "alpha(T*,T) is not positive semidefinite",
                {{"min_eigenvalue", ev(0)}, {"threshold", -psd_tol * scale}});
  // eigen-dust on either side of zero is zero before taking the root
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::abs(ev(i)) <= psd_tol * scale ? 0.0 : std::sqrt(ev(i));
  const Matrix& U = es.eigenvectors();
  out.D = U * ev.cast<cd>().asDiagonal() * U.adjoint();
  out.eigenvalues = ev;
  const double dn = ev.maxCoeff();
  out.rank_tol = rank_tol > 0.0 ? rank_tol : 1e-8 * dn;

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = ev.size(); i-- > 0;)
    if (ev(i) > out.rank_tol) keep.push_back(i);
  out.basis.resize(T.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) out.basis.col(static_cast<Eigen::Index>(j)) = U.col(keep[j]);
  normalize_phases(out.basis);
  return out;
}

TransformResult build_transform(const Matrix& C, const TruncatedSeries& k, const Matrix& T,
                                std::optional<std::size_t> M, double tol) {
  if (T.rows() != T.cols() || C.cols() != T.rows())
    throw Error(Errc::invalid_argument, "C must map the space of T", {{"C_cols", C.cols()}, {"d", T.rows()}});
  if (M && *M < 1) throw Error(Errc::invalid_argument, "degree cap M must be >= 1");
  if (!(tol > 0.0)) throw Error(Errc::invalid_argument, "tol must be positive");

  TransformResult out;
  out.r = static_cast<std::size_t>(C.rows());
  const Eigen::Index d = T.rows(), r = C.rows();
  const double cnorm = r ? operator_norm(C) : 0.0;
  const bool contraction = operator_norm(T) <= 1.0 + 1e-12;
  PowerBound pb;
  bool pb_done = false;

  // Bound on sum_{n>m} k_n ||C T^n||^2 given P = C T^{m+1}.
  auto tail_after = [&](std::size_t m, const Matrix& P, std::string& route) -> double {
    const double pn = P.size() ? P.norm() : 0.0;
    if (pn <= 1e-300) {
      route = "exact: C T^(M+1) = 0";
      return 0.0;
    }
    double best = kInf;
    if (contraction) {
      const TailSum ts = tail_sum_from(k, m + 1);
      if (ts.known) {
        const double op = operator_norm(P);
        best = op * op * ts.hi;
        route = "contraction: ||C T^(M+1)||^2 sum_{n>M} k_n";
      }
    }
    if (!pb_done) pb = power_bound(T), pb_done = true;
    if (pb.ok) {
      const TailBound tb = geometric_tail(k, std::min(m, k.N()), pb.eta);
      if (tb.known && cnorm * cnorm * pb.K * tb.bound < best) {
        best = cnorm * cnorm * pb.K * tb.bound;
        route = "geometric: ||C||^2 K sum_{n>M} k_n eta^n";
      }
    }
    return best;
  };

  std::vector<Matrix> blocks;
  Matrix P = C;
  const std::size_t cap = M ? *M : std::max<std::size_t>(4096, static_cast<std::size_t>(d));
  for (std::size_t n = 0;; ++n) {
    blocks.push_back(std::sqrt(kernel_coefficient(k, n)) * P);
    P = P * T;
    if (M && n < *M) continue;
    std::string route;
    const double tail = tail_after(n, P, route);
    const bool good = tail <= (M ? tol : tol / 10.0);
    if (good || n >= cap) {
      if (!good)
        throw Error(Errc::tail_uncertifiable, "truncation tail of the transform is not certifiably below tol",
                    {{"M", n}, {"tail_bound", tail}, {"tol", tol}});
      out.M = n;
      out.tail_bound = tail;
      out.tail_route = route;
      break;
    }
  }
  out.V.resize(static_cast<Eigen::Index>(blocks.size()) * r, d);
  for (std::size_t n = 0; n < blocks.size(); ++n)
    if (r) out.V.middleRows(static_cast<Eigen::Index>(n) * r, r) = blocks[n];
  return out;
}

json ContractionReport::to_json() const {
  return {{"norm", norm}, {"contraction_excess", contraction_excess}, {"pass", pass}};
}

ContractionReport verify_np_contraction(const TruncatedSeries& alpha, const Matrix& T, const Matrix& V) {
  const ConditionReport np = classify_np(alpha);
  if (np.verdict != Verdict::Holds)
    throw Error(Errc::precondition_failed, "alpha is not of Nevanlinna-Pick type", np.witness);
  std::vector<Vector> probes;
  for (Eigen::Index i = 0; i < T.rows(); ++i) probes.push_back(Vector::Unit(T.rows(), i));
  const MembershipReport m = class_membership(alpha, T, probes);
  if (!is_pass(m.in_Cw_plus))
    throw Error(Errc::precondition_failed, "T is not in the positive class for alpha",
                {{"in_Cw_plus", verdict_name(m.in_Cw_plus)}, {"min_eigenvalue", m.min_eigenvalue}});
  ContractionReport rep;
  rep.norm = V.size() ? operator_norm(V) : 0.0;
  rep.contraction_excess = std::max(0.0, rep.norm - 1.0);
  rep.pass = rep.contraction_excess <= 1e-8;
  return rep;
}

WSResult build_W_S(const Matrix& V, const Matrix& T, double tol, double rank_tol) {
  const Eigen::Index d = T.rows();
  if (V.cols() != d) throw Error(Errc::invalid_argument, "V and T dimensions differ");
  WSResult out;
  out.rank_tol = rank_tol;
  Matrix A = Matrix::Identity(d, d);
  if (V.rows()) A -= V.adjoint() * V;
  A = (A + A.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  Eigen::VectorXd ev = es.eigenvalues();
  out.min_eigenvalue = ev(0);
  if (ev(0) < -tol)
    throw Error(Errc::model_invalid, "V is not a contraction: I - V*V has a negative eigenvalue",
                {{"min_eigenvalue", ev(0)}, {"tol", tol}});
  // Gram rounding (~1e-15) would otherwise surface as 1e-8-sized W
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = ev(i) <= 1e-12 ? 0.0 : std::sqrt(ev(i));
  const Matrix& U = es.eigenvectors();
  out.W = U * ev.cast<cd>().asDiagonal() * U.adjoint();

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = ev.size(); i-- > 0;)
    if (ev(i) > rank_tol) keep.push_back(i);
  const auto w = static_cast<Eigen::Index>(keep.size());
  out.W_basis.resize(d, w);
  Eigen::VectorXd lam(w);
  for (Eigen::Index j = 0; j < w; ++j) {
    out.W_basis.col(j) = U.col(keep[static_cast<std::size_t>(j)]);
    lam(j) = ev(keep[static_cast<std::size_t>(j)]);
  }
  normalize_phases(out.W_basis);

  const Matrix WT = out.W * T;
  const Matrix& Q = out.W_basis;
  if (w > 0) {
    out.S = Q.adjoint() * WT * Q * lam.cwiseInverse().cast<cd>().asDiagonal();
    out.S_full = Q * out.S * Q.adjoint();
    out.S_isometry_residual = operator_norm(out.S.adjoint() * out.S - Matrix::Identity(w, w));
  } else {
    out.S.resize(0, 0);
    out.S_full = Matrix::Zero(d, d);
  }
  // S(Wx) = WTx must not depend on the representative: WT vanishes on ker W.
  const Matrix ker_proj = Matrix::Identity(d, d) - Q * Q.adjoint();
  double welldef = operator_norm(WT * ker_proj);
  for (Eigen::Index i = 0; i < d; ++i)
    welldef = std::max(welldef, std::abs(out.W.col(i).norm() - WT.col(i).norm()));
  out.S_welldef_residual = welldef;
  if (welldef > tol)
    throw Error(Errc::model_invalid, "S(Wx) := WTx is not well defined at this tolerance",
                {{"S_welldef_residual", welldef}, {"tol", tol}});
  return out;
}

json ModelDiagnostics::to_json() const {
  return {{"isometry_residual", isometry_residual},
          {"contraction_excess", contraction_excess},
          {"intertwine_residual", intertwine_residual},
          {"SW_residual", SW_residual},
          {"S_welldef_residual", S_welldef_residual},
          {"S_isometry_residual", S_isometry_residual},
          {"truncation_tail_bound", truncation_tail_bound},
          {"W_norm", W_norm},
          {"M", M},
          {"rank_defect", rank_defect},
          {"rank_W", rank_W},
          {"type", kernel_type_name(type)}};
}

ModelDiagnostics verify_model(const Matrix& T, const ModelBundle& b, const TruncatedSeries& k) {
  ModelDiagnostics g = b.diagnostics;
  const Eigen::Index d = T.rows(), r = b.C.rows();
  Matrix G = b.W.adjoint() * b.W - Matrix::Identity(d, d);
  if (b.V.rows()) G += b.V.adjoint() * b.V;
  g.isometry_residual = operator_norm(G);
  g.contraction_excess = std::max(0.0, (b.V.size() ? operator_norm(b.V) : 0.0) - 1.0);
  g.W_norm = operator_norm(b.W);
  g.rank_W = static_cast<std::size_t>(b.W_basis.cols());
  g.rank_defect = static_cast<std::size_t>(r);

  if (r > 0) {
    const Eigen::Index blocks = b.V.rows() / r;
    g.M = static_cast<std::size_t>(blocks - 1);
    Matrix R = -(b.V * T);
    for (Eigen::Index n = 0; n + 1 < blocks; ++n) {
      const auto nn = static_cast<std::size_t>(n);
      const double w = std::sqrt(kernel_coefficient(k, nn) / kernel_coefficient(k, nn + 1));
      R.middleRows(n * r, r) += w * b.V.middleRows((n + 1) * r, r);
    }
    g.intertwine_residual = operator_norm(R);
  } else {
    g.intertwine_residual = 0.0;
  }
  g.SW_residual = operator_norm(b.S_full * b.W - b.W * T);
  return g;
}

ModelBundle assemble_model(const Matrix& C, const TruncatedSeries& k, const Matrix& T, const ModelOptions& opt) {
  const TransformResult tr = build_transform(C, k, T, opt.M, opt.tol);
  const WSResult ws = build_W_S(tr.V, T, opt.tol);
  ModelBundle b;
  b.C = C;
  b.V = tr.V;
  b.W = ws.W;
  b.W_basis = ws.W_basis;
  b.S = ws.S;
  b.S_full = ws.S_full;
  b.W_rank_tol = ws.rank_tol;
  b.diagnostics.M = tr.M;
  b.diagnostics.truncation_tail_bound = tr.tail_bound;
  b.diagnostics.S_welldef_residual = ws.S_welldef_residual;
  b.diagnostics.S_isometry_residual = ws.S_isometry_residual;
  b.diagnostics = verify_model(T, b, k);
  b.diagnostics.M = tr.M;
  return b;
}

ModelBundle build_model(const KernelPair& pair, const Matrix& T, const ModelOptions& opt) {
  DefectResult def;
  try {
    def = build_defect(pair.alpha, T, opt.rank_tol, opt.psd_tol);
  } catch (const Error& e) {
    if (e.code() != Errc::not_psd) throw;
    throw Error(Errc::model_invalid, std::string("T is not alpha-modelable: ") + e.what(), e.witness());
  }
  ModelBundle b = assemble_model(def.C(), pair.k, T, opt);
  b.D = def.D;
  b.defect_basis = def.basis;
  const ConditionReport crit = classify_critical(pair);
  const std::string t = crit.witness.value("type", "Indeterminate");
  b.diagnostics.type = t == "Critical" ? KernelType::Critical
                       : t == "Subcritical" ? KernelType::Subcritical
                                            : KernelType::Indeterminate;
  return b;
}

json RelationReport::to_json() const {
  return {{"max_residual", max_residual}, {"alpha_at_1", alpha_at_1}, {"probes", probes}};
}

RelationReport verify_relation_DCW(const TruncatedSeries& alpha, const Matrix& T, const Matrix& C, const Matrix& W,
                                   const std::vector<Vector>& probes) {
  if (probes.empty()) throw Error(Errc::invalid_argument, "probe set must be nonempty");
  const HereditaryResult h = hereditary_apply(alpha, T);
  RelationReport rep;
  rep.alpha_at_1 = alpha_at_one(alpha).estimate;
  rep.probes = probes.size();
  for (const auto& x : probes) {
    const double xx = x.squaredNorm();
    if (!(xx > 0.0)) throw Error(Errc::invalid_argument, "probe vectors must be nonzero");
    const double dx = x.dot(h.value * x).real();
    const double cx = C.rows() ? (C * x).squaredNorm() : 0.0;
    const double wx = (W * x).squaredNorm();
    rep.max_residual = std::max(rep.max_residual, std::abs(dx - cx - rep.alpha_at_1 * wx) / xx);
  }
  return rep;
}

json MinimalityReport::to_json() const {
  return {{"range_C", verdict_name(range_C)}, {"range_W", verdict_name(range_W)},
          {"rank_C", rank_C},                 {"dim_E", dim_E},
          {"rank_W", rank_W},                 {"dim_W", dim_W}};
}

namespace {
std::size_t numeric_rank(const Matrix& A, double tol) {
  if (A.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(A);
  const auto& s = svd.singularValues();
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return r;
}
}  // namespace

MinimalityReport minimality_check(const ModelBundle& b, double rank_tol) {
  MinimalityReport rep;
  rep.dim_E = static_cast<std::size_t>(b.C.rows());
  const double cn = b.C.size() ? operator_norm(b.C) : 0.0;
  rep.rank_C = numeric_rank(b.C, rank_tol * std::max(1.0, cn));
  rep.range_C = rep.rank_C == rep.dim_E ? Verdict::Holds : Verdict::Fails;
  rep.dim_W = static_cast<std::size_t>(b.W_basis.cols());
  rep.rank_W = numeric_rank(b.W, b.W_rank_tol);
  rep.range_W = rep.rank_W == rep.dim_W ? Verdict::Holds : Verdict::Fails;
  return rep;
}

}  // namespace hered
