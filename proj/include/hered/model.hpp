// Defect operator, the transform V_C into H_k (x) E, the complement W and the
// isometry S of the explicit model, with residual diagnostics.
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "hered/operator.hpp"
#include "hered/series.hpp"

namespace hered {

struct DefectResult {
  Matrix D;                          // (alpha(T*,T))^{1/2}
  Matrix basis;                      // d x r, orthonormal, eigenvectors with eigenvalue > rank_tol
  Eigen::VectorXd eigenvalues;       // of D, ascending
  double rank_tol = 0.0;
  HereditaryResult hereditary;
  // Defect map into C^r: C = basis* D, so ||Cx|| = ||Dx||.
  Matrix C() const { return basis.adjoint() * D; }
};

// rank_tol <= 0 selects 1e-8 ||D||.
DefectResult build_defect(const TruncatedSeries& alpha, const Matrix& T, double rank_tol = 0.0,
                          double psd_tol = 1e-10);

struct TransformResult {
  Matrix V;  // (M+1) r x d, block n = sqrt(k_n) C T^n
  std::size_t M = 0;
  std::size_t r = 0;
  double tail_bound = 0.0;  // bound on sum_{n>M} k_n ||C T^n||^2
  std::string tail_route;
};

// Without M: nilpotency index when C T^m vanishes, else the smallest M with tail <= tol/10.
TransformResult build_transform(const Matrix& C, const TruncatedSeries& k, const Matrix& T,
                                std::optional<std::size_t> M = std::nullopt, double tol = 1e-10);

struct ContractionReport {
  double norm = 0.0;
  double contraction_excess = 0.0;
  bool pass = false;
  json to_json() const;
};

// Checks its preconditions (alpha NP, T in the positive class) and throws
// precondition_failed when either is not established.
ContractionReport verify_np_contraction(const TruncatedSeries& alpha, const Matrix& T, const Matrix& V);

struct WSResult {
  Matrix W;        // (I - V*V)^{1/2}
  Matrix W_basis;  // d x w, orthonormal basis of the range of W
  Matrix S;        // w x w, S on the range of W in W_basis coordinates
  Matrix S_full;   // d x d, W_basis S W_basis*
  double S_welldef_residual = 0.0;
  double S_isometry_residual = 0.0;
  double min_eigenvalue = 0.0;  // of I - V*V before clipping
  double rank_tol = 0.0;
};

WSResult build_W_S(const Matrix& V, const Matrix& T, double tol = 1e-8, double rank_tol = 1e-7);

struct ModelDiagnostics {
  double isometry_residual = 0.0;     // ||V*V + W*W - I||
  double contraction_excess = 0.0;    // max(0, ||V|| - 1)
  double intertwine_residual = 0.0;   // ||(B_k (x) I) V - V T||
  double SW_residual = 0.0;           // ||S W - W T||
  double S_welldef_residual = 0.0;
  double S_isometry_residual = 0.0;
  double truncation_tail_bound = 0.0;
  double W_norm = 0.0;
  std::size_t M = 0;
  std::size_t rank_defect = 0;
  std::size_t rank_W = 0;
  KernelType type = KernelType::Indeterminate;
  json to_json() const;
};

struct ModelBundle {
  Matrix D;
  Matrix defect_basis;
  Matrix C;
  Matrix V;
  Matrix W;
  Matrix W_basis;
  Matrix S;
  Matrix S_full;
  double W_rank_tol = 1e-7;
  ModelDiagnostics diagnostics;
};

struct ModelOptions {
  std::optional<std::size_t> M;
  double tol = 1e-8;        // model and W/S tolerance
  double rank_tol = 0.0;    // defect rank cut, 0 selects 1e-8 ||D||
  double psd_tol = 1e-10;
};

// Full pipeline with C = D; failures of positivity surface as model_invalid.
ModelBundle build_model(const KernelPair& pair, const Matrix& T, const ModelOptions& opt = {});

// Bundle from a caller-chosen C (used for the trivial and padded models).
ModelBundle assemble_model(const Matrix& C, const TruncatedSeries& k, const Matrix& T, const ModelOptions& opt = {});

ModelDiagnostics verify_model(const Matrix& T, const ModelBundle& bundle, const TruncatedSeries& k);

struct RelationReport {
  double max_residual = 0.0;
  double alpha_at_1 = 0.0;
  std::size_t probes = 0;
  json to_json() const;
};

// max over probes of | ||Dx||^2 - ||Cx||^2 - alpha(1) ||Wx||^2 | / ||x||^2.
RelationReport verify_relation_DCW(const TruncatedSeries& alpha, const Matrix& T, const Matrix& C, const Matrix& W,
                                   const std::vector<Vector>& probes);

struct MinimalityReport {
  Verdict range_C = Verdict::Indeterminate;   // Ran C dense in E
  Verdict range_W = Verdict::Indeterminate;   // W_basis spans the range of W
  std::size_t rank_C = 0, dim_E = 0, rank_W = 0, dim_W = 0;
  json to_json() const;
};

MinimalityReport minimality_check(const ModelBundle& bundle, double rank_tol = 1e-8);

}  // namespace hered
