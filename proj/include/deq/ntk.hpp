#ifndef DEQ_NTK_HPP
#define DEQ_NTK_HPP

#include <cstdint>
#include <utility>

#include "deq/core.hpp"
#include "deq/implicit.hpp"
#include "deq/model.hpp"

namespace deq {

// Empirical NTK Gram matrix at one time point with its spectrum and the
// per-sample factors it was assembled from.
struct GramSnapshot {
  double t = 0.0;
  Matrix H;            // n x n, symmetrized
  Vector eigenvalues;  // ascending
  double lambda_min = 0.0;
  Matrix Zrows;  // n x m, factor z_i per row
  Matrix Jrows;  // n x m, factor J_i per row
};

// H_ij = (gamma^2/m) (z_i^T z_j)(J_i . J_j), assembled as a Hadamard product
// of the two Gram factors; symmetric eigensolver on (H + H^T)/2.
GramSnapshot gram(const ModelParams& params, const EquilibriumBatch& eq,
                  const std::vector<NtkFactors>& factors, double t = 0.0);

// Same assembly from row-batched factors (trainer path).
GramSnapshot gram_from_rows(const ModelParams& params, const Matrix& Zrows,
                            const Matrix& Jrows, double t);

// k_t(x0, X): kernel row of a unit query point against the training factors.
Vector kernel_cross(const ModelParams& params, const GramSnapshot& snapshot,
                    const Vector& x0);

// (spectral, frobenius) norms of H_t - H_0.
std::pair<double, double> gram_drift(const GramSnapshot& Ht,
                                     const GramSnapshot& H0);

struct LimitingKernelEstimate {
  Matrix H_inf;  // n x n
  int reps = 0;
  int m_mc = 0;
  Matrix standard_error;  // entrywise, sample std / sqrt(reps)
};

// Monte-Carlo estimate of the limiting kernel: average of H(0) over reps
// independent initializations at width m_mc.
LimitingKernelEstimate limiting_ntk_mc(int d, Scheme scheme, double gamma0,
                                       const Matrix& X, int m_mc, int reps,
                                       std::uint64_t seed,
                                       PhiKind phi_kind = PhiKind::relu,
                                       int threads = 1);

// Arc-cosine closed form of E_w[sigma(Xw) sigma(Xw)^T] for unit rows:
// G_ij = (sin t + (pi - t) cos t) / (2 pi), t = angle(x_i, x_j).
Matrix relu_expectation_kernel(const Matrix& X);

struct PsdOrderingCheck {
  double lhs = 0.0;  // lambda_min(H(0))
  double rhs = 0.0;  // computed prefactor * lambda_min(feature Gram)
  double prefactor = 0.0;
};

// Half-normal-scheme PSD ordering with the prefactor computed numerically on
// the per-sample block (||b||^2 lambda_min(Q^{-1}Q^{-T}) gamma^2 / m) instead
// of an absorbed constant.
PsdOrderingCheck min_eig_lower_bound_51(const ModelParams& params,
                                        const EquilibriumBatch& eq);

}  // namespace deq

#endif  // DEQ_NTK_HPP
