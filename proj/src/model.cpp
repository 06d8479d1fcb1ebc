#include "deq/model.hpp"

#include <algorithm>
#include <cmath>

#include "deq/rng.hpp"

namespace deq {

namespace {

constexpr std::uint64_t kTagW = 0x57;  // 'W'
constexpr std::uint64_t kTagA = 0x41;  // 'A'
constexpr std::uint64_t kTagB = 0x42;  // 'b'

std::uint64_t column_stream(std::uint64_t seed, std::uint64_t block, Index col) {
  return derive_stream(seed, (block << 32) ^ static_cast<std::uint64_t>(col));
}

}  // namespace

void validate(const DataBatch& data) {
  if (data.X.rows() != data.n || data.y.size() != data.n) {
    throw DimensionMismatch("DataBatch: X/y size does not match n");
  }
  for (Index i = 0; i < data.X.rows(); ++i) {
    if (std::abs(data.X.row(i).norm() - 1.0) > 1e-12) {
      throw InvalidConfig("DataBatch: row " + std::to_string(i) +
                          " is not unit norm");
    }
    if (std::abs(data.y[i]) > 1.0 + 1e-15) {
      throw InvalidConfig("DataBatch: |y| > 1 at row " + std::to_string(i));
    }
  }
}

ModelParams init_params(int d, int m, double gamma0, Scheme scheme,
                        std::uint64_t seed, PhiKind phi_kind) {
  if (d < 1 || m < 1) throw InvalidConfig("init_params: d, m must be >= 1");
  if (!(gamma0 > 0.0 && gamma0 < 1.0)) {
    throw InvalidConfig("init_params: gamma0 must lie in (0,1)");
  }

  ModelParams p;
  p.d = d;
  p.m = m;
  p.gamma0 = gamma0;
  p.gamma = gamma0 / std::sqrt(static_cast<double>(m));
  p.scheme = scheme;
  p.phi_kind = phi_kind;

  p.W.resize(d, m);
  for (Index r = 0; r < m; ++r) {
    RngStream g(column_stream(seed, kTagW, r));
    for (Index i = 0; i < d; ++i) p.W(i, r) = g.normal();
  }

  p.A = Matrix::Zero(m, m);
  switch (scheme) {
    case Scheme::subgaussian:
      for (Index c = 0; c < m; ++c) {
        RngStream g(column_stream(seed, kTagA, c));
        for (Index r = 0; r < m; ++r) p.A(r, c) = g.normal();
      }
      break;
    case Scheme::half_normal_a:
      for (Index c = 0; c < m; ++c) {
        RngStream g(column_stream(seed, kTagA, c));
        for (Index r = 0; r < m; ++r) p.A(r, c) = g.half_normal();
      }
      break;
    case Scheme::diagonal_a:
      for (Index c = 0; c < m; ++c) {
        RngStream g(column_stream(seed, kTagA, c));
        p.A(c, c) = g.normal();
      }
      break;
  }

  p.b.resize(m);
  for (Index r = 0; r < m; ++r) {
    RngStream g(column_stream(seed, kTagB, r));
    p.b[r] = g.sign();
  }
  return p;
}

double apply_phi(PhiKind kind, double v) {
  switch (kind) {
    case PhiKind::relu: return v > 0.0 ? v : 0.0;
    case PhiKind::identity: return v;
    case PhiKind::tanh: return std::tanh(v);
  }
  return v;
}

Matrix features(const ModelParams& params, const Matrix& X) {
  if (X.cols() != params.d) {
    throw DimensionMismatch("features: X has " + std::to_string(X.cols()) +
                            " columns, expected d=" + std::to_string(params.d));
  }
  Matrix Phi = X * params.W;
  switch (params.phi_kind) {
    case PhiKind::relu:
      Phi = Phi.cwiseMax(0.0);
      break;
    case PhiKind::identity:
      break;
    case PhiKind::tanh:
      Phi = Phi.array().tanh().matrix();
      break;
  }
  return Phi;
}

SpectralEstimate spectral_norm_estimate(const Matrix& A) {
  if (A.rows() != A.cols()) {
    throw DimensionMismatch("spectral_norm_estimate: matrix must be square");
  }
  const Index m = A.rows();
  SpectralEstimate out;
  if (m == 0) return out;

  // Deterministic seeded start; power iteration on A^T A.
  RngStream g(derive_stream(0x5eedULL, static_cast<std::uint64_t>(m)));
  Vector v(m);
  for (Index i = 0; i < m; ++i) v[i] = g.normal();
  v.normalize();

  constexpr double kRelTol = 1e-6;
  constexpr int kMaxIter = 2000;
  double sigma = 0.0;
  for (int it = 1; it <= kMaxIter; ++it) {
    Vector w = A.transpose() * (A * v);
    const double nw = w.norm();
    if (nw == 0.0) {  // v in the null space; A could still be nonzero only if
      out.value = 0.0;  // it annihilates the start vector — treat as zero.
      out.converged = true;
      out.iterations = it;
      return out;
    }
    const double sigma_new = std::sqrt(nw);
    v = w / nw;
    out.iterations = it;
    if (it > 1 && std::abs(sigma_new - sigma) <= kRelTol * sigma_new) {
      out.value = sigma_new;
      out.converged = true;
      return out;
    }
    sigma = sigma_new;
  }
  out.value = sigma;
  out.converged = false;
  return out;
}

namespace {

inline Matrix picard_map(const ModelParams& p, const Matrix& Z, const Matrix& Phi) {
  return (p.gamma * Z * p.A + Phi).cwiseMax(0.0);
}

}  // namespace

EquilibriumBatch solve_equilibrium(const ModelParams& params, const Matrix& Phi,
                                   const SolveOptions& opts) {
  if (Phi.cols() != params.m) {
    throw DimensionMismatch("solve_equilibrium: Phi columns != m");
  }
  const double kappa =
      (opts.spectral_hint >= 0.0)
          ? opts.spectral_hint
          : params.gamma * spectral_norm_estimate(params.A).value;
  if (kappa >= 1.0) {
    throw NonContractive("solve_equilibrium: gamma*||A|| estimate " +
                         std::to_string(kappa) + " >= 1");
  }

  EquilibriumBatch eq;
  eq.Phi = Phi;
  eq.spectral_estimate = kappa;
  eq.Z = (opts.warm_start != nullptr) ? *opts.warm_start
                                      : Matrix::Zero(Phi.rows(), Phi.cols());

  Matrix mapped = picard_map(params, eq.Z, Phi);
  double res = (mapped - eq.Z).norm();
  if (opts.keep_history) eq.residual_history.push_back(res);

  int max_iter = opts.max_iter;
  if (max_iter <= 0) {
    // Contraction-rate budget: enough iterations to shrink the measured
    // starting residual below tol at rate kappa, plus slack; capped at 10000.
    const double need =
        std::log(std::max(res / opts.tol, 10.0)) / -std::log(kappa);
    max_iter = static_cast<int>(std::min(10000.0, std::ceil(need) + 50.0));
  }

  while (res > opts.tol) {
    if (eq.iterations >= max_iter) {
      eq.residual = res;
      throw MaxIterExceeded("solve_equilibrium: residual " +
                            std::to_string(res) + " > tol after " +
                            std::to_string(max_iter) + " iterations");
    }
    eq.Z.swap(mapped);
    ++eq.iterations;
    mapped = picard_map(params, eq.Z, Phi);
    res = (mapped - eq.Z).norm();  // exact residual of the current iterate
    if (opts.keep_history) eq.residual_history.push_back(res);
  }
  eq.residual = res;
  return eq;
}

Matrix closed_form_equilibrium_nonneg(const ModelParams& params,
                                      const Matrix& Phi) {
  if ((params.A.array() < 0.0).any()) {
    throw PreconditionViolated(
        "closed_form_equilibrium_nonneg: A has negative entries");
  }
  if ((Phi.array() < 0.0).any()) {
    throw PreconditionViolated(
        "closed_form_equilibrium_nonneg: Phi has negative entries");
  }
  const Index m = params.m;
  const Matrix M = Matrix::Identity(m, m) - params.gamma * params.A;
  // Z (I - gamma A) = Phi, solved as M^T Z^T = Phi^T.
  return M.transpose().partialPivLu().solve(Phi.transpose()).transpose();
}

Vector predict(const ModelParams& params, const Matrix& Z) {
  if (Z.cols() != params.m) {
    throw DimensionMismatch("predict: Z columns != m");
  }
  return Z * params.b / std::sqrt(static_cast<double>(params.m));
}

}  // namespace deq
