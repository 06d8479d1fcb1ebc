#include "deq/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "deq/parallel.hpp"
#include "deq/rng.hpp"

namespace deq {

namespace {

GramSnapshot assemble(const ModelParams& params, const Matrix& Zrows,
                      const Matrix& Jrows, double t) {
  GramSnapshot s;
  s.t = t;
  s.Zrows = Zrows;
  s.Jrows = Jrows;
  const double scale =
      params.gamma * params.gamma / static_cast<double>(params.m);
  Matrix H = scale * (Zrows * Zrows.transpose())
                         .cwiseProduct(Jrows * Jrows.transpose());
  s.H = 0.5 * (H + H.transpose());  // kill round-off asymmetry
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.H, Eigen::EigenvaluesOnly);
  s.eigenvalues = es.eigenvalues();  // ascending
  s.lambda_min = s.eigenvalues[0];
  return s;
}

}  // namespace

GramSnapshot gram(const ModelParams& params, const EquilibriumBatch& eq,
                  const std::vector<NtkFactors>& factors, double t) {
  const Index n = eq.Z.rows();
  if (factors.size() != static_cast<std::size_t>(n)) {
    throw DimensionMismatch("gram: factor count != n");
  }
  Matrix Zrows(n, params.m), Jrows(n, params.m);
  for (Index i = 0; i < n; ++i) {
    Zrows.row(i) = factors[static_cast<std::size_t>(i)].z.transpose();
    Jrows.row(i) = factors[static_cast<std::size_t>(i)].J.transpose();
  }
  return assemble(params, Zrows, Jrows, t);
}

GramSnapshot gram_from_rows(const ModelParams& params, const Matrix& Zrows,
                            const Matrix& Jrows, double t) {
  return assemble(params, Zrows, Jrows, t);
}

Vector kernel_cross(const ModelParams& params, const GramSnapshot& snapshot,
                    const Vector& x0) {
  const NtkFactors f = feature_map(params, x0);
  const double scale =
      params.gamma * params.gamma / static_cast<double>(params.m);
  return scale * (snapshot.Zrows * f.z).cwiseProduct(snapshot.Jrows * f.J);
}

std::pair<double, double> gram_drift(const GramSnapshot& Ht,
                                     const GramSnapshot& H0) {
  if (Ht.H.rows() != H0.H.rows()) {
    throw DimensionMismatch("gram_drift: snapshots have different n");
  }
  const Matrix diff = Ht.H - H0.H;
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  const double spectral =
      std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
  return {spectral, diff.norm()};
}

LimitingKernelEstimate limiting_ntk_mc(int d, Scheme scheme, double gamma0,
                                       const Matrix& X, int m_mc, int reps,
                                       std::uint64_t seed, PhiKind phi_kind,
                                       int threads) {
  if (reps < 2) throw InvalidConfig("limiting_ntk_mc: reps must be >= 2");
  if (X.cols() != d) throw DimensionMismatch("limiting_ntk_mc: X columns != d");
  const Index n = X.rows();

  std::vector<Matrix> hs(static_cast<std::size_t>(reps));
  parallel_for(0, reps, threads, [&](long r) {
    const ModelParams p =
        init_params(d, m_mc, gamma0,
                    scheme, derive_stream(seed, 0x6d63ULL + static_cast<std::uint64_t>(r)),
                    phi_kind);
    const Matrix Phi = features(p, X);
    const EquilibriumBatch eq = solve_equilibrium(p, Phi);
    const ActivationPattern pat = activation_pattern(p, eq.Z, Phi);
    const NtkRowBatch rows = ntk_factor_rows(p, pat);
    hs[static_cast<std::size_t>(r)] =
        gram_from_rows(p, eq.Z, rows.J, 0.0).H;
  });

  LimitingKernelEstimate est;
  est.reps = reps;
  est.m_mc = m_mc;
  Matrix mean = Matrix::Zero(n, n);
  for (const Matrix& h : hs) mean += h;
  mean /= static_cast<double>(reps);
  Matrix var = Matrix::Zero(n, n);
  for (const Matrix& h : hs) var += (h - mean).cwiseAbs2();
  var /= static_cast<double>(reps - 1);
  est.H_inf = 0.5 * (mean + mean.transpose());
  est.standard_error = (var / static_cast<double>(reps)).cwiseSqrt();
  return est;
}

Matrix relu_expectation_kernel(const Matrix& X) {
  const Index n = X.rows();
  for (Index i = 0; i < n; ++i) {
    if (std::abs(X.row(i).norm() - 1.0) > 1e-9) {
      throw NonUnitRows("relu_expectation_kernel: row " + std::to_string(i) +
                        " is not unit norm");
    }
  }
  Matrix G(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      constexpr double pi = std::numbers::pi;
      const double c = std::clamp(X.row(i).dot(X.row(j)), -1.0, 1.0);
      const double theta = std::acos(c);
      const double v =
          (std::sin(theta) + (pi - theta) * std::cos(theta)) / (2.0 * pi);
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return G;
}

PsdOrderingCheck min_eig_lower_bound_51(const ModelParams& params,
                                        const EquilibriumBatch& eq) {
  if (params.scheme != Scheme::half_normal_a) {
    throw SchemeMismatch(
        "min_eig_lower_bound_51: requires the half-normal scheme");
  }
  if (params.phi_kind != PhiKind::relu) {
    throw SchemeMismatch("min_eig_lower_bound_51: requires phi = relu");
  }
  const Index m = params.m;

  const ActivationPattern pat = activation_pattern(params, eq.Z, eq.Phi);
  const std::vector<NtkFactors> factors = ntk_factors(params, eq, pat);
  const GramSnapshot snap = gram(params, eq, factors, 0.0);

  // At t=0 in the half-normal scheme the preactivations are strictly positive
  // on generic data, so every block shares D_i = I and lambda_min(Q^{-1}Q^{-T})
  // over the nm x nm object equals the per-sample value 1/sigma_max(Q_i)^2.
  Matrix Qi = -params.gamma * params.A.transpose();
  for (Index r = 0; r < m; ++r) {
    if (pat.diag(0, r) == 0.0) Qi.row(r).setZero();
  }
  Qi.diagonal().array() += 1.0;
  const double sigma_max = spectral_norm_estimate(Qi).value;

  const double pre = params.b.squaredNorm() / static_cast<double>(m) *
                     params.gamma * params.gamma / (sigma_max * sigma_max);

  Eigen::SelfAdjointEigenSolver<Matrix> es(
      eq.Phi * eq.Phi.transpose(), Eigen::EigenvaluesOnly);

  PsdOrderingCheck chk;
  chk.prefactor = pre;
  chk.lhs = snap.lambda_min;
  chk.rhs = pre * std::max(es.eigenvalues()[0], 0.0);
  return chk;
}

}  // namespace deq
