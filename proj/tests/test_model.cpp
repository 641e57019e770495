#include <doctest.h>

#include <cmath>
#include <random>

#include "hered/error.hpp"
#include "hered/kernel_analysis.hpp"
#include "hered/model.hpp"

using namespace hered;

namespace {
double max_abs(const Matrix& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

TruncatedSeries muller_kernel(std::size_t N, double A = 0.1, double b = 2.0) {
  std::vector<double> c(N + 1);
  c[0] = 1.0;
  for (std::size_t n = 1; n <= N; ++n) c[n] = A * std::pow(double(n), -b);
  return TruncatedSeries(c, Generator::power_tail(A, b, 1));
}

Matrix random_unitary(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> N01;
  Matrix A(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = cd(N01(rng), N01(rng));
  Eigen::HouseholderQR<Matrix> qr(A);
  return qr.householderQ() * Matrix::Identity(d, d);
}

Matrix phases(std::mt19937_64& rng, Eigen::Index d) {
  std::uniform_real_distribution<double> U(0, 2 * M_PI);
  Matrix T = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) T(i, i) = std::polar(1.0, U(rng));
  return T;
}

std::vector<Vector> seeded_vectors(std::mt19937_64& rng, Eigen::Index d, int count) {
  std::normal_distribution<double> N01;
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) {
    Vector x(d);
    for (auto& v : x) v = cd(N01(rng), N01(rng));
    out.push_back(x);
  }
  return out;
}
}  // namespace

TEST_CASE("defect examples") {
  auto hardy = shift_section(binomial_series(1.0, PowSign::PowMinus, 8), Direction::Backward, 4).op.matrix();
  auto d = build_defect(polynomial({1, -1}, 4), hardy);
  CHECK(d.basis.cols() == 1);
  CHECK(std::abs(std::abs(d.basis(0, 0)) - 1.0) < 1e-14);

  auto half = shift_section(binomial_series(0.5, PowSign::PowMinus, 16), Direction::Backward, 8).op.matrix();
  auto d2 = build_defect(binomial_series(0.5, PowSign::PowPlus, 64), half);
  CHECK(max_abs(d2.D * d2.D - d2.hereditary.value) <= 1e-12);

  std::mt19937_64 rng(2);
  Matrix U = phases(rng, 5);
  auto d3 = build_defect(polynomial({1, -0.75}, 4), U);
  CHECK(d3.basis.cols() == 5);
  CHECK(max_abs(d3.D - 0.5 * Matrix::Identity(5, 5)) <= 1e-12);

  auto expansive = 1.5 * hardy;
  CHECK_THROWS_AS(build_defect(binomial_series(0.5, PowSign::PowPlus, 64), expansive), Error);
}

TEST_CASE("transform examples") {
  auto kap = binomial_series(0.5, PowSign::PowMinus, 64);
  auto T = shift_section(kap, Direction::Backward, 8).op.matrix();
  Matrix C = Matrix::Zero(1, 8);
  C(0, 0) = 1.0;
  auto tr = build_transform(C, kap, T);
  CHECK(tr.M == 7);
  CHECK(tr.tail_bound == 0.0);
  CHECK(max_abs(tr.V - Matrix::Identity(8, 8)) <= 1e-10);

  // scalar closed form against evaluate(k, q^2)
  const double q = 0.6, c = 0.7;
  Matrix Tq = Matrix::Constant(1, 1, cd(q, 0));
  Matrix Cc = Matrix::Constant(1, 1, cd(c, 0));
  auto k = muller_kernel(4096);
  auto ts = build_transform(Cc, k, Tq, std::nullopt, 1e-12);
  const double vv = (ts.V.adjoint() * ts.V)(0, 0).real();
  const auto ev = evaluate(k, q * q);
  CHECK(std::abs(vv - c * c * ev.value.real()) <= 1e-12);
  CHECK(ts.tail_bound <= 1e-13);

  Matrix U = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(build_transform(Matrix::Identity(2, 2), binomial_series(1.0, PowSign::PowMinus, 64), U, 10, 1e-8),
                  Error);
}

TEST_CASE("NP contraction") {
  auto kap = binomial_series(0.5, PowSign::PowMinus, 64);
  auto alpha = binomial_series(0.5, PowSign::PowPlus, 64);
  auto T = shift_section(kap, Direction::Backward, 32).op.matrix();
  auto def = build_defect(alpha, T);
  auto tr = build_transform(def.C(), kap, T);
  CHECK(verify_np_contraction(alpha, T, tr.V).pass);

  std::mt19937_64 rng(4);
  Matrix K = random_unitary(rng, 6) * 0.9;
  auto a1 = polynomial({1, -1}, 4);
  auto d1 = build_defect(a1, K);
  auto t1 = build_transform(d1.C(), binomial_series(1.0, PowSign::PowMinus, 4096), K, std::nullopt, 1e-12);
  CHECK(verify_np_contraction(a1, K, t1.V).contraction_excess <= 1e-10);

  auto hardy = shift_section(binomial_series(1.0, PowSign::PowMinus, 16), Direction::Backward, 8).op.matrix();
  try {
    verify_np_contraction(alpha, 1.5 * hardy, Matrix::Zero(1, 8));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::precondition_failed);
  }
}

TEST_CASE("W and S") {
  std::mt19937_64 rng(8);
  Matrix U = phases(rng, 4);
  auto ws = build_W_S(Matrix::Zero(0, 4), U);
  CHECK(max_abs(ws.W - Matrix::Identity(4, 4)) <= 1e-14);
  CHECK(max_abs(ws.S_full - U) <= 1e-12);

  auto kap = binomial_series(0.5, PowSign::PowMinus, 64);
  auto alpha = binomial_series(0.5, PowSign::PowPlus, 64);
  auto T = shift_section(kap, Direction::Backward, 16).op.matrix();
  auto b = build_model(reciprocal(alpha, 64), T);
  CHECK(b.diagnostics.W_norm <= 1e-8);
  CHECK(b.W_basis.cols() == 0);

  auto mk = muller_kernel(2048);
  auto pair = pair_from_kernel(mk);
  auto Tm = shift_section(mk, Direction::Backward, 32).op.matrix();
  auto bm = build_model(pair, Tm);
  CHECK(bm.diagnostics.W_norm <= 1e-8);
  CHECK(bm.diagnostics.type == KernelType::Subcritical);
}

TEST_CASE("verify model") {
  auto mk = muller_kernel(2048);
  auto pair = pair_from_kernel(mk);
  auto T = shift_section(mk, Direction::Backward, 64).op.matrix();
  auto b = build_model(pair, T);
  CHECK(b.diagnostics.isometry_residual <= 1e-10);
  CHECK(b.diagnostics.intertwine_residual <= 1e-10);
  CHECK(b.diagnostics.SW_residual <= 1e-10);

  std::mt19937_64 rng(9);
  Matrix U = phases(rng, 6);
  auto trivial = assemble_model(Matrix::Zero(0, 6), mk, U);
  CHECK(trivial.diagnostics.isometry_residual <= 1e-12);
  CHECK(trivial.diagnostics.SW_residual <= 1e-12);

  // a perturbed section leaves the class; the pipeline or the residuals notice
  Matrix P = T;
  P(3, 5) += 0.1;
  bool noticed = false;
  try {
    auto bp = build_model(pair, P);
    noticed = bp.diagnostics.isometry_residual > 1e-3 || bp.diagnostics.intertwine_residual > 1e-3 ||
              bp.diagnostics.SW_residual > 1e-3;
  } catch (const Error& e) {
    noticed = e.code() == Errc::model_invalid;
  }
  CHECK(noticed);
}

TEST_CASE("two models for a unitary with a subcritical kernel") {
  std::mt19937_64 rng(10);
  Matrix U = phases(rng, 4);
  auto k = binomial_series(1.0, PowSign::PowMinus, 64);  // not needed beyond a summable check
  auto mk = muller_kernel(4096);
  auto pair = pair_from_kernel(mk);
  auto trivial = assemble_model(Matrix::Zero(0, 4), mk, U);
  CHECK(trivial.diagnostics.isometry_residual <= 1e-12);
  ModelOptions opt;
  opt.M = 4000;
  opt.tol = 1e-3;
  auto vd = build_model(pair, U, opt);
  CHECK(vd.diagnostics.isometry_residual <= 1e-10);
  CHECK(vd.diagnostics.SW_residual <= 1e-10);
  CHECK(vd.diagnostics.intertwine_residual <= 1e-3);
  CHECK(vd.defect_basis.cols() == 4);
  (void)k;
}

TEST_CASE("unitary invariance") {
  auto mk = muller_kernel(2048);
  auto pair = pair_from_kernel(mk);
  auto T = shift_section(mk, Direction::Backward, 16).op.matrix();
  std::mt19937_64 rng(12);
  Matrix Q = random_unitary(rng, 16);
  auto b1 = build_model(pair, T);
  auto b2 = build_model(pair, Q * T * Q.adjoint());
  CHECK(std::abs(b1.diagnostics.isometry_residual - b2.diagnostics.isometry_residual) <= 1e-9);
  CHECK(std::abs(b1.diagnostics.intertwine_residual - b2.diagnostics.intertwine_residual) <= 1e-9);
  CHECK(std::abs(b1.diagnostics.W_norm - b2.diagnostics.W_norm) <= 1e-9);
  CHECK(b1.diagnostics.rank_defect == b2.diagnostics.rank_defect);
}

TEST_CASE("relation between D, C and W") {
  std::mt19937_64 rng(13);
  Matrix U = phases(rng, 8);
  auto alpha = polynomial({1, -0.3, -0.2}, 8);
  auto probes = seeded_vectors(rng, 8, 100);
  auto rel = verify_relation_DCW(alpha, U, Matrix::Zero(0, 8), Matrix::Identity(8, 8), probes);
  CHECK(rel.max_residual <= 1e-10);
  CHECK(rel.alpha_at_1 == doctest::Approx(0.5));

  auto crit = binomial_series(0.5, PowSign::PowPlus, 64);
  auto T = shift_section(binomial_series(0.5, PowSign::PowMinus, 64), Direction::Backward, 16).op.matrix();
  auto b = build_model(reciprocal(crit, 64), T);
  auto pr = seeded_vectors(rng, 16, 20);
  CHECK(verify_relation_DCW(crit, T, b.C, b.W, pr).max_residual <= 1e-8);

  auto mk = muller_kernel(2048);
  auto pair = pair_from_kernel(mk);
  auto Tm = shift_section(mk, Direction::Backward, 32).op.matrix();
  auto bm = build_model(pair, Tm);
  CHECK(verify_relation_DCW(pair.alpha, Tm, bm.C, bm.W, seeded_vectors(rng, 32, 20)).max_residual <= 1e-8);
}

TEST_CASE("minimality") {
  auto mk = muller_kernel(2048);
  auto pair = pair_from_kernel(mk);
  auto T = shift_section(mk, Direction::Backward, 16).op.matrix();
  auto b = build_model(pair, T);
  auto m = minimality_check(b);
  CHECK(m.range_C == Verdict::Holds);
  CHECK(m.range_W == Verdict::Holds);

  ModelBundle padded = b;
  padded.C.conservativeResize(b.C.rows() + 1, Eigen::NoChange);
  padded.C.row(b.C.rows()).setZero();
  CHECK(minimality_check(padded).range_C == Verdict::Fails);

  std::mt19937_64 rng(14);
  Matrix U = phases(rng, 5);
  auto trivial = assemble_model(Matrix::Zero(0, 5), mk, U);
  auto mt = minimality_check(trivial);
  CHECK(mt.range_C == Verdict::Holds);
  CHECK(mt.range_W == Verdict::Holds);
  CHECK(mt.dim_W == 5);
}

TEST_CASE("section-scale equivalence for a Mueller kernel") {
  auto mk = muller_kernel(2048);
  REQUIRE(muller_condition_estimate(mk).verdict == Verdict::TrendHolds);
  auto pair = pair_from_kernel(mk);
  auto B = shift_section(mk, Direction::Backward, 24).op.matrix();
  Matrix T2 = direct_sum(B, B);
  for (Eigen::Index dp : {8, 16, 24}) {
    Matrix T = direct_sum(B.topLeftCorner(dp, dp), B.topLeftCorner(dp, dp));
    std::vector<Vector> probes;
    for (Eigen::Index i = 0; i < T.rows(); ++i) probes.push_back(Vector::Unit(T.rows(), i));
    auto mem = class_membership(pair.alpha, T, probes);
    CHECK(mem.in_Cw_plus == Verdict::Holds);
    auto b = build_model(pair, T);
    CHECK(b.diagnostics.isometry_residual <= 1e-8);
    CHECK(b.diagnostics.intertwine_residual <= 1e-8);
  }
  Matrix bad = 1.3 * T2;
  CHECK_THROWS_AS(build_model(pair, bad), Error);
}
