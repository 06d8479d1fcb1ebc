#ifndef DEQ_IMPLICIT_HPP
#define DEQ_IMPLICIT_HPP

#include <vector>

#include "deq/core.hpp"
#include "deq/model.hpp"

namespace deq {

// Row i holds the 0/1 diagonal of D_i = diag[sigma'(gamma A^T z_i + phi_i)].
// sigma'(0) := 0, so exact-zero preactivations are inactive.
struct ActivationPattern {
  Matrix diag;  // n x m, entries in {0,1}
};

ActivationPattern activation_pattern(const ModelParams& params, const Matrix& Z,
                                     const Matrix& Phi);

// Per-sample NTK feature factors: df/dA at sample i equals
// (gamma/sqrt(m)) * outer(z_i, J_i) with J_i = b^T Q_i^{-1} D_i and
// Q_i = I_m - gamma D_i A^T.
struct NtkFactors {
  Vector z;  // m
  Vector J;  // m
  double residual = 0.0;  // ||Q_i^T x - b|| of the solve behind J_i
};

// One m x m LU solve per sample: Q_i^T x = b, then J_i = D_i x.
std::vector<NtkFactors> ntk_factors(const ModelParams& params,
                                    const EquilibriumBatch& eq,
                                    const ActivationPattern& pattern);

// Batched fixed-point path for the same rows: X <- 1 b^T + gamma (D o X) A^T,
// J = D o X. Contracts at the same rate as the forward pass; used by the
// trainer where n LU factorizations per step would dominate. Agrees with
// ntk_factors to solver tolerance (both satisfy the same linear systems).
struct NtkRowBatch {
  Matrix J;  // n x m, row i = J_i
  Matrix X;  // n x m, unmasked solve state (warm start for the next call)
  double max_residual = 0.0;
  int iterations = 0;
};

NtkRowBatch ntk_factor_rows(const ModelParams& params,
                            const ActivationPattern& pattern,
                            double tol = 1e-11,
                            const Matrix* warm_start = nullptr,
                            double spectral_hint = -1.0);

struct LossGradient {
  Matrix G;  // m x m, gradient of L = 0.5||u - y||^2 with respect to A
  double grad_norm = 0.0;
};

// G = (gamma/sqrt(m)) sum_i (u_i - y_i) z_i J_i^T.
LossGradient loss_grad_A(const ModelParams& params, const EquilibriumBatch& eq,
                         const std::vector<NtkFactors>& factors,
                         const Vector& u, const Vector& y);

// Factors (z_x, J_x) of df/dA = (gamma/sqrt(m)) outer(z_x, J_x) at a unit
// query point; same computation path as a training sample.
NtkFactors feature_map(const ModelParams& params, const Vector& x);

// Literal vectorized objects (column-major vec), test oracle only:
//   Q = I_{nm} - gamma D (A^T kron I_n)
//   J = (b^T kron I_n) Q^{-1} D            (n x nm)
//   H = (gamma^2/m) J (I_m kron Z Z^T) J^T (n x n)
struct DenseKroneckerReference {
  Matrix Q;       // nm x nm
  Vector D_diag;  // nm
  Matrix J;       // n x nm
  Matrix H;       // n x n
};

DenseKroneckerReference dense_kronecker_reference(const ModelParams& params,
                                                  const EquilibriumBatch& eq,
                                                  const ActivationPattern& pattern);

// Directional derivative of Z along dA: per sample Q_i dz_i = gamma D_i dA^T z_i,
// solved by LU on the m x m blocks.
Matrix dZ_dA_action(const ModelParams& params, const EquilibriumBatch& eq,
                    const ActivationPattern& pattern, const Matrix& dA);

}  // namespace deq

#endif  // DEQ_IMPLICIT_HPP
