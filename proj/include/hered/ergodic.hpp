// Cesaro means of order a, (C,a,p)-boundedness probes with trend
// classification, closed-form shift thresholds and mean-ergodic projections.
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "hered/model.hpp"
#include "hered/operator.hpp"

namespace hered {

enum class TrendKind { Bounded, DecaysToZero, LogGrowth, PowerGrowth };
const char* trend_name(TrendKind t);
inline bool trend_bounded(TrendKind t) { return t == TrendKind::Bounded || t == TrendKind::DecaysToZero; }

struct TrendFit {
  TrendKind kind = TrendKind::Bounded;
  double sup = 0.0;
  double last = 0.0;
  double exponent_fit = 0.0;   // slope of log V against log n, late half
  double growth_gamma = 0.0;   // slope of log(dV/dlog n) against log n, late half
  double log_slope = 0.0;      // slope of V against log n, late half
  double r2_log = 0.0;         // R^2 of that fit
  double r2_loglog = 0.0;      // R^2 of V against log log n
  json to_json() const;
};

// Bounded when the increments dV/dlog n decay like a negative power, LogGrowth
// when they level off, PowerGrowth when they grow; DecaysToZero by the decade rule.
TrendFit classify_trend(const std::vector<std::size_t>& n, const std::vector<double>& v);

// ~per_decade log-spaced integers in [lo, hi], both ends included.
std::vector<std::size_t> log_grid(std::size_t lo, std::size_t hi, std::size_t per_decade = 12);

struct ErgodicProbe {
  double a = 1.0;
  double p = 2.0;
  std::vector<std::size_t> n_grid;
  std::vector<std::vector<double>> samples;  // per vector, aligned with n_grid
  std::vector<TrendFit> trends;
  TrendFit worst;  // the least bounded trend over the vectors
  bool diagonal = false;
  std::vector<TrendTable> tables() const;
  json to_json() const;
};

// M(n) = (1/k^{a+1}(n)) sum_{j<=n} k^a(n-j) ||T^j x||^p for each x, by running powers.
ErgodicProbe cesaro_probe(const Matrix& T, const std::vector<Vector>& xs, double a, double p,
                          const std::vector<std::size_t>& n_grid);
ErgodicProbe cesaro_probe(const SparseMatrix& T, const std::vector<Vector>& xs, double a, double p,
                          const std::vector<std::size_t>& n_grid);

// The vector moves with n: x = e_n (standard basis), requires n < dim T.
ErgodicProbe cesaro_probe_diagonal(const Matrix& T, double a, double p, const std::vector<std::size_t>& n_grid);
ErgodicProbe cesaro_probe_diagonal(const SparseMatrix& T, double a, double p, const std::vector<std::size_t>& n_grid);

enum class OracleKind { Quadratic712, General714, Membership74, Norm };

struct OracleResult {
  bool bounded = false;  // for the boolean kinds
  double value = 0.0;    // for Norm: ||B_s^m||^2 or ||F_s^m||^2
  double threshold = 0.0;
  json to_json() const;
};

// Quadratic712: x = a; General714: x = b with q; Membership74: x = a; Norm: x = m.
OracleResult shift_threshold_oracle(double s, double x, double q, OracleKind kind);

struct TrichotomyRow {
  double norm2 = 0.0;
  double min_power_norm2 = 0.0;  // min_{n<=n_max} ||T^n x||^2
  double cesaro_limit = 0.0;     // M^b(n_max) with p = 2
  double W_norm2 = 0.0;          // ||W x||^2
  bool S_present = false;
  bool consistent = false;
};

struct TrichotomyReport {
  std::vector<TrichotomyRow> rows;
  double b = 1.0;
  std::size_t n_max = 0;
  double tol = 0.05;
  Verdict verdict = Verdict::Indeterminate;
  json to_json() const;
};

// Indicators agree when pairwise within tol ||x||^2; S present when ||Wx||^2 > 1e-6 ||x||^2.
TrichotomyReport trichotomy_test(const Matrix& T, const ModelBundle& bundle, const std::vector<Vector>& xs,
                                 std::size_t n_max, double b = 1.0, double tol = 0.05);

struct ImplicationCase {
  double a = 1.0, p = 2.0;  // antecedent (C,a,p)
  double b = 1.0, q = 2.0;  // consequent (C,b,q)
};

struct ImplicationRow {
  ImplicationCase c;
  TrendKind antecedent = TrendKind::Bounded;
  TrendKind consequent = TrendKind::Bounded;
  bool vacuous = false;
  bool violated = false;
};

struct ImplicationReport {
  std::vector<ImplicationRow> rows;
  Verdict verdict = Verdict::Indeterminate;
  json to_json() const;
};

ImplicationReport implication_battery(const SparseMatrix& T, const std::vector<ImplicationCase>& cases,
                                      const std::vector<Vector>& xs, const std::vector<std::size_t>& n_grid);

struct OperatorMeans {
  std::vector<std::size_t> n;
  std::vector<double> mean_norm;   // ||M^b_T(n)||
  std::vector<double> power_norm;  // ||T^n||
  Matrix last_mean;
};

// Operator-valued means; b = 1 uses a running sum, other b keep all powers (small d only).
OperatorMeans cesaro_operator_means(const Matrix& T, double b, const std::vector<std::size_t>& n_grid);

struct ErgodicProjection {
  Matrix P;
  double cauchy_residual = 0.0;
  double idempotence_residual = 0.0;
  double kernel_range_residual = 0.0;  // Ker(I-T) vs Ran P
  double range_kernel_residual = 0.0;  // Ran(I-T) vs Ker P
  std::size_t fixed_dim = 0;
  json to_json() const;
};

ErgodicProjection mean_ergodic_projection(const Matrix& T, double b, std::size_t n_max, double tol,
                                          double rank_tol = 1e-8);

}  // namespace hered
