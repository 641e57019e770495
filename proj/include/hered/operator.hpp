// Dense complex operators, weighted shift sections, the hereditary calculus
// alpha(T*,T) = sum alpha_n T*^n T^n and class-membership tests.
#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "hered/report.hpp"
#include "hered/series.hpp"

namespace hered {

using cd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<cd, Eigen::RowMajor>;

class DenseOperator {
 public:
  DenseOperator() = default;
  explicit DenseOperator(Matrix m, std::string labels = {});

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  const std::string& labels() const { return labels_; }

 private:
  Matrix m_;
  std::string labels_;
};

enum class Direction { Backward, Forward };
enum class Realization { Euclidean, Weighted };

struct ShiftSection {
  DenseOperator op;  // Euclidean realization (orthonormal u_n = e_n / sqrt(kappa_n))
  Direction direction = Direction::Backward;
  Realization realization = Realization::Euclidean;
  bool is_part = true;  // false for forward sections: a compression only
  std::vector<double> weights;

  SparseMatrix sparse() const;
  // Same operator written in the monomial basis e_n with metric diag(kappa).
  Matrix weighted_matrix() const;
};

ShiftSection shift_section(const TruncatedSeries& kappa, Direction dir, std::size_t d);
// Same matrix, built sparse (large d).
SparseMatrix shift_section_sparse(const TruncatedSeries& kappa, Direction dir, std::size_t d);

double operator_norm(const Matrix& A);
double spectral_radius(const Matrix& T);          // eigenvalues for d <= 512, else Gelfand
double spectral_radius_eig(const Matrix& T);
double spectral_radius_gelfand(const Matrix& T);  // ||T^{2^k}||^{2^-k}, stabilized to 1e-8
double hermitian_asymmetry(const Matrix& A);      // ||A - A*|| / max(1, ||A||)
bool is_psd(const Matrix& A, double tol = 1e-10);
double min_eigenvalue(const Matrix& A);
// Negative eigenvalues in [-tol ||A||, 0) are clipped; anything lower is not-psd.
Matrix hermitian_sqrt(const Matrix& A, double tol = 1e-10);

Matrix direct_sum(const Matrix& A, const Matrix& B);
SparseMatrix to_sparse(const Matrix& A);

enum class Policy { ExactNilpotent, ExactPolynomial, ExactStationary, GeometricTail, Truncated };
const char* policy_name(Policy p);

struct HereditaryResult {
  Matrix value;      // alpha(T*,T), symmetrized
  Matrix abs_value;  // sum |alpha_n| T*^n T^n
  Policy policy = Policy::Truncated;
  double rho_est = 0.0;
  std::size_t M = 0;        // last index summed explicitly
  double tail_bound = 0.0;  // bound on the neglected part (0 when exact)
  bool abs_finite = true;   // false when the stationary remainder of sum |alpha_n| diverges
  std::string warning;
  double asymmetry = 0.0;

  json to_json() const;
};

HereditaryResult hereditary_apply(const TruncatedSeries& alpha, const Matrix& T, double tol = 1e-12,
                                  std::size_t n_cap = 100000);

struct MembershipReport {
  Verdict in_Cw = Verdict::Indeterminate;
  Verdict in_Cw_plus = Verdict::Indeterminate;
  double sup_partial_norm = 0.0;
  double min_eigenvalue = 0.0;
  HereditaryResult hereditary;

  json to_json() const;
};

MembershipReport class_membership(const TruncatedSeries& alpha, const Matrix& T,
                                  const std::vector<Vector>& probes, double tol = 1e-10);

struct ShiftMembership {
  Verdict cond_i = Verdict::Indeterminate;   // sup gamma_m / kappa_m finite
  Verdict cond_ii = Verdict::Indeterminate;  // sign condition
  Verdict verdict = Verdict::Indeterminate;  // membership in the positive class
  bool is_part = true;
  json witness = json::object();
  std::vector<TrendTable> tables;

  json to_json() const;
};

ShiftMembership shift_membership_backward(const TruncatedSeries& alpha, const TruncatedSeries& kappa);
ShiftMembership shift_membership_forward(const TruncatedSeries& alpha, const TruncatedSeries& kappa);

// CSV with "re+imj" tokens; dimensions inferred from the rows.
Matrix parse_matrix_csv(const std::string& text);
Matrix read_matrix_csv(const std::string& path);
std::string matrix_csv(const Matrix& A);

}  // namespace hered
