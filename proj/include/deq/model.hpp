#ifndef DEQ_MODEL_HPP
#define DEQ_MODEL_HPP

#include <cstdint>
#include <vector>

#include "deq/core.hpp"

namespace deq {

// Outer activation phi applied to W^T x. The implicit-layer activation sigma
// is always ReLU; phi is selectable (any 1-Lipschitz function works).
enum class PhiKind { relu, identity, tanh };

enum class Scheme { subgaussian, half_normal_a, diagonal_a };

// Network: f(x) = b^T z / sqrt(m) with z the fixed point of
//   z = sigma(gamma A^T z + phi(W^T x)),   gamma = gamma0 / sqrt(m).
// W and b are frozen after initialization; only A trains.
struct ModelParams {
  Matrix W;        // d x m, first layer (frozen)
  Matrix A;        // m x m, implicit layer (trained)
  Vector b;        // m, output layer, entries +-1 (frozen)
  double gamma0 = 0.0;
  double gamma = 0.0;  // gamma0 / sqrt(m), kept exact
  int d = 0;
  int m = 0;
  PhiKind phi_kind = PhiKind::relu;
  Scheme scheme = Scheme::subgaussian;
};

struct DataBatch {
  Matrix X;  // n x d, rows unit norm
  Vector y;  // n, |y_i| <= 1
  int n = 0;
};

// Throws DimensionMismatch / InvalidConfig when rows are not unit norm
// (1e-12) or labels exceed [-1, 1].
void validate(const DataBatch& data);

// Draws are split per (seed, block, column) so initialization at width m is
// the leading block of the same seed at any larger width. That keeps width
// sweeps on common random numbers and parallel init deterministic.
ModelParams init_params(int d, int m, double gamma0, Scheme scheme,
                        std::uint64_t seed, PhiKind phi_kind = PhiKind::relu);

// Phi_{ir} = phi(w_r^T x_i).
Matrix features(const ModelParams& params, const Matrix& X);

double apply_phi(PhiKind kind, double v);

struct SpectralEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Power iteration on A^T A; relative accuracy 1e-6 with a fixed cap.
SpectralEstimate spectral_norm_estimate(const Matrix& A);

struct EquilibriumBatch {
  Matrix Phi;  // n x m
  Matrix Z;    // n x m, rows are per-sample fixed points
  int iterations = 0;
  double residual = 0.0;           // ||Z - sigma(gamma Z A + Phi)||_F at return
  double spectral_estimate = 0.0;  // estimate of gamma * ||A||
  std::vector<double> residual_history;
};

struct SolveOptions {
  double tol = 1e-10;  // Frobenius, on the whole batch
  int max_iter = 0;    // 0 -> residual-scaled contraction budget, capped 10000
  const Matrix* warm_start = nullptr;  // default: zero start
  bool keep_history = false;
  // Upper bound on gamma*||A|| supplied by the caller; skips the power
  // iteration when in [0, 1). Stopping stays residual-based either way.
  double spectral_hint = -1.0;
};

// Picard iteration Z <- sigma(gamma Z A + Phi). Throws NonContractive when
// the spectral estimate of gamma||A|| reaches 1, MaxIterExceeded when the
// residual stays above tol.
EquilibriumBatch solve_equilibrium(const ModelParams& params, const Matrix& Phi,
                                   const SolveOptions& opts = {});

// Neumann closed form Z = Phi (I - gamma A)^{-1}, valid when A and Phi are
// entrywise nonnegative (sigma is the identity on nonnegative preactivations).
Matrix closed_form_equilibrium_nonneg(const ModelParams& params,
                                      const Matrix& Phi);

// u = Z b / sqrt(m).
Vector predict(const ModelParams& params, const Matrix& Z);

}  // namespace deq

#endif  // DEQ_MODEL_HPP
