#include "deq/implicit.hpp"

#include <cmath>
#include <string>

namespace deq {

ActivationPattern activation_pattern(const ModelParams& params, const Matrix& Z,
                                     const Matrix& Phi) {
  // Preactivations gamma z_i^T A + phi_i^T, batch rows: gamma Z A + Phi.
  const Matrix pre = params.gamma * Z * params.A + Phi;
  ActivationPattern p;
  p.diag = (pre.array() > 0.0).cast<double>();
  return p;
}

std::vector<NtkFactors> ntk_factors(const ModelParams& params,
                                    const EquilibriumBatch& eq,
                                    const ActivationPattern& pattern) {
  const Index n = eq.Z.rows();
  const Index m = params.m;
  const double norm_b = params.b.norm();
  std::vector<NtkFactors> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    // Q_i^T = I_m - gamma A D_i: masking D_i on the right scales columns of A.
    Matrix QiT = -params.gamma * params.A;
    for (Index c = 0; c < m; ++c) {
      if (pattern.diag(i, c) == 0.0) QiT.col(c).setZero();
    }
    QiT.diagonal().array() += 1.0;

    const Vector x = QiT.partialPivLu().solve(params.b);
    const double res = (QiT * x - params.b).norm();
    if (!x.allFinite() || res > 1e-6 * std::max(1.0, norm_b)) {
      throw SingularBlock("ntk_factors: block solve failed at sample " +
                          std::to_string(i) + " (residual " +
                          std::to_string(res) + ")");
    }
    NtkFactors f;
    f.z = eq.Z.row(i).transpose();
    f.J = pattern.diag.row(i).transpose().cwiseProduct(x);
    f.residual = res;
    out[static_cast<std::size_t>(i)] = std::move(f);
  }
  return out;
}

NtkRowBatch ntk_factor_rows(const ModelParams& params,
                            const ActivationPattern& pattern, double tol,
                            const Matrix* warm_start, double spectral_hint) {
  const Index n = pattern.diag.rows();
  NtkRowBatch out;
  const Matrix Bt = params.b.transpose().replicate(n, 1);
  out.X = (warm_start != nullptr) ? *warm_start : Bt;

  const double kappa =
      (spectral_hint >= 0.0)
          ? spectral_hint
          : params.gamma * spectral_norm_estimate(params.A).value;
  if (kappa >= 1.0) {
    throw NonContractive("ntk_factor_rows: gamma*||A|| estimate >= 1");
  }

  Matrix mapped = Bt + params.gamma *
                           pattern.diag.cwiseProduct(out.X) *
                           params.A.transpose();
  double res = (mapped - out.X).norm();
  const double need = std::log(std::max(res / tol, 10.0)) / -std::log(kappa);
  const int max_iter = static_cast<int>(std::min(10000.0, std::ceil(need) + 50.0));

  while (res > tol) {
    if (out.iterations >= max_iter) {
      throw MaxIterExceeded("ntk_factor_rows: residual " + std::to_string(res) +
                            " > tol after " + std::to_string(max_iter) +
                            " iterations");
    }
    out.X.swap(mapped);
    ++out.iterations;
    mapped = Bt + params.gamma *
                      pattern.diag.cwiseProduct(out.X) *
                      params.A.transpose();
    res = (mapped - out.X).norm();
  }
  out.max_residual = res;
  out.J = pattern.diag.cwiseProduct(out.X);
  return out;
}

LossGradient loss_grad_A(const ModelParams& params, const EquilibriumBatch& eq,
                         const std::vector<NtkFactors>& factors,
                         const Vector& u, const Vector& y) {
  const Index n = eq.Z.rows();
  if (u.size() != n || y.size() != n ||
      factors.size() != static_cast<std::size_t>(n)) {
    throw DimensionMismatch("loss_grad_A: inconsistent batch sizes");
  }
  Matrix J(n, params.m);
  for (Index i = 0; i < n; ++i) {
    J.row(i) = factors[static_cast<std::size_t>(i)].J.transpose();
  }
  LossGradient g;
  const double scale = params.gamma / std::sqrt(static_cast<double>(params.m));
  g.G = scale * eq.Z.transpose() * (u - y).asDiagonal() * J;
  g.grad_norm = g.G.norm();
  return g;
}

NtkFactors feature_map(const ModelParams& params, const Vector& x) {
  if (x.size() != params.d) {
    throw DimensionMismatch("feature_map: x has wrong dimension");
  }
  if (std::abs(x.norm() - 1.0) > 1e-9) {
    throw NonUnitRows("feature_map: query point must be unit norm");
  }
  const Matrix Phi = features(params, x.transpose());
  const EquilibriumBatch eq = solve_equilibrium(params, Phi);
  const ActivationPattern pattern = activation_pattern(params, eq.Z, Phi);
  std::vector<NtkFactors> f = ntk_factors(params, eq, pattern);
  return f.front();
}

DenseKroneckerReference dense_kronecker_reference(const ModelParams& params,
                                                  const EquilibriumBatch& eq,
                                                  const ActivationPattern& pattern) {
  const Index n = eq.Z.rows();
  const Index m = params.m;
  const Index nm = n * m;
  if (nm > 4000) {
    throw SizeGuard("dense_kronecker_reference: n*m = " + std::to_string(nm) +
                    " exceeds the 4000 cap (test oracle only)");
  }

  DenseKroneckerReference ref;
  // Column-major vec: block r of length n is column r of the n x m matrix.
  ref.D_diag.resize(nm);
  for (Index r = 0; r < m; ++r) {
    ref.D_diag.segment(r * n, n) = pattern.diag.col(r);
  }

  // Q = I_{nm} - gamma D (A^T kron I_n); (A^T kron I_n) block (r,s) = A(s,r) I_n.
  ref.Q = Matrix::Identity(nm, nm);
  for (Index r = 0; r < m; ++r) {
    for (Index s = 0; s < m; ++s) {
      const double a = params.A(s, r);
      if (a == 0.0) continue;
      for (Index i = 0; i < n; ++i) {
        ref.Q(r * n + i, s * n + i) -= params.gamma * ref.D_diag[r * n + i] * a;
      }
    }
  }

  // J = (b^T kron I_n) Q^{-1} D.
  Matrix BI(n, nm);  // b^T kron I_n
  BI.setZero();
  for (Index r = 0; r < m; ++r) {
    for (Index i = 0; i < n; ++i) BI(i, r * n + i) = params.b[r];
  }
  const Matrix Qinv_D =
      ref.Q.partialPivLu().solve(Matrix(ref.D_diag.asDiagonal()));
  ref.J = BI * Qinv_D;

  // H = (gamma^2/m) J (I_m kron Z Z^T) J^T.
  const Matrix ZZt = eq.Z * eq.Z.transpose();
  Matrix JK(n, nm);  // J (I_m kron Z Z^T): block r multiplies by Z Z^T
  for (Index r = 0; r < m; ++r) {
    JK.middleCols(r * n, n) = ref.J.middleCols(r * n, n) * ZZt;
  }
  ref.H = (params.gamma * params.gamma / static_cast<double>(m)) * JK *
          ref.J.transpose();
  return ref;
}

Matrix dZ_dA_action(const ModelParams& params, const EquilibriumBatch& eq,
                    const ActivationPattern& pattern, const Matrix& dA) {
  if (dA.rows() != params.m || dA.cols() != params.m) {
    throw DimensionMismatch("dZ_dA_action: dA must be m x m");
  }
  const Index n = eq.Z.rows();
  const Index m = params.m;
  const Matrix R = eq.Z * dA;  // row i = (dA^T z_i)^T
  Matrix out(n, m);
  for (Index i = 0; i < n; ++i) {
    // Q_i dz_i = gamma D_i dA^T z_i with Q_i = I_m - gamma D_i A^T.
    Matrix Qi = -params.gamma * params.A.transpose();
    for (Index r = 0; r < m; ++r) {
      if (pattern.diag(i, r) == 0.0) Qi.row(r).setZero();
    }
    Qi.diagonal().array() += 1.0;
    const Vector rhs =
        params.gamma * pattern.diag.row(i).transpose().cwiseProduct(
                           R.row(i).transpose());
    const Vector dz = Qi.partialPivLu().solve(rhs);
    if (!dz.allFinite()) {
      throw SingularBlock("dZ_dA_action: block solve failed at sample " +
                          std::to_string(i));
    }
    out.row(i) = dz.transpose();
  }
  return out;
}

}  // namespace deq
