#include "deq/kernel_machine.hpp"

#include <cmath>
#include <string>

namespace deq {

namespace {

std::vector<double> floored_eigenvalues(const Vector& eigvals, double floor) {
  std::vector<double> bad;
  for (Index i = 0; i < eigvals.size(); ++i) {
    if (eigvals[i] < floor) bad.push_back(eigvals[i]);
  }
  return bad;
}

}  // namespace

FrozenKernelModel build_frozen_model(const GramSnapshot& H0, const Vector& u0,
                                     const Vector& y) {
  if (u0.size() != H0.H.rows() || y.size() != H0.H.rows()) {
    throw DimensionMismatch("build_frozen_model: u0/y size != n");
  }
  FrozenKernelModel m;
  Eigen::SelfAdjointEigenSolver<Matrix> es(H0.H);
  m.eigvecs = es.eigenvectors();
  m.eigvals = es.eigenvalues();
  m.u0 = u0;
  m.y = y;
  m.residual0 = y - u0;
  m.snapshot = H0;
  const double lam_max = m.eigvals[m.eigvals.size() - 1];
  m.eig_floor = 1e-10 * std::max(lam_max, 0.0);
  if (m.eigvals[0] >= m.eig_floor && lam_max > 0.0) {
    const Vector proj = m.eigvecs.transpose() * m.residual0;
    m.alpha_inf = m.eigvecs * proj.cwiseQuotient(m.eigvals);
  }
  return m;
}

Vector u_hat(const FrozenKernelModel& model, double t) {
  if (t < 0.0) throw InvalidConfig("u_hat: t must be >= 0");
  const Vector proj = model.eigvecs.transpose() * model.residual0;
  const Vector decayed =
      (-t * model.eigvals.array()).exp().matrix().cwiseProduct(proj);
  return model.y - model.eigvecs * decayed;
}

double f_hat(const FrozenKernelModel& model, const Vector& kernel_row, double t,
             double f0_x0) {
  if (kernel_row.size() != model.eigvals.size()) {
    throw DimensionMismatch("f_hat: kernel row size != n");
  }
  if (std::isinf(t)) {
    if (!model.alpha_inf) {
      throw SingularKernel(
          "f_hat: H(0) has eigenvalues below the inversion floor at t=inf",
          floored_eigenvalues(model.eigvals, model.eig_floor));
    }
    return f0_x0 + kernel_row.dot(*model.alpha_inf);
  }
  if (t < 0.0) throw InvalidConfig("f_hat: t must be >= 0");
  const Vector proj = model.eigvecs.transpose() * model.residual0;
  Vector g(model.eigvals.size());
  for (Index i = 0; i < g.size(); ++i) {
    const double lam = model.eigvals[i];
    // (1 - e^{-lam t})/lam; removable singularity at lam = 0.
    g[i] = (lam == 0.0) ? t : -std::expm1(-lam * t) / lam;
  }
  return f0_x0 + kernel_row.dot(model.eigvecs * g.cwiseProduct(proj));
}

std::vector<double> coupling_gap_train(const FlowTrace& trace,
                                       const FrozenKernelModel& model) {
  std::vector<double> gaps;
  gaps.reserve(trace.records.size());
  for (const FlowRecord& r : trace.records) {
    gaps.push_back((r.u - u_hat(model, r.t)).norm());
  }
  return gaps;
}

GenBoundReport gen_bound(const FrozenKernelModel& model, double delta, int n) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidConfig("gen_bound: delta must lie in (0,1)");
  }
  if (!model.alpha_inf) {
    throw SingularKernel(
        "gen_bound: H(0) has eigenvalues below the inversion floor",
        floored_eigenvalues(model.eigvals, model.eig_floor));
  }
  GenBoundReport rep;
  rep.delta = delta;
  rep.lambda_spectrum = model.eigvals;
  const Vector proj = model.eigvecs.transpose() * model.residual0;
  rep.alignment = proj.cwiseAbs2();
  rep.b_squared = rep.alignment.cwiseQuotient(model.eigvals).sum();
  const double trace_h = model.eigvals.sum();
  rep.rademacher =
      std::sqrt(rep.b_squared) / static_cast<double>(n) * std::sqrt(trace_h);
  rep.bound_rhs = std::sqrt(rep.b_squared / static_cast<double>(n)) +
                  std::sqrt(std::log(1.0 / delta) / static_cast<double>(n));
  return rep;
}

GenBoundReport gen_bound_ntk_inf(const LimitingKernelEstimate& H_inf,
                                 const Vector& y, double delta, int n) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidConfig("gen_bound_ntk_inf: delta must lie in (0,1)");
  }
  if (y.size() != H_inf.H_inf.rows()) {
    throw DimensionMismatch("gen_bound_ntk_inf: y size != n");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(H_inf.H_inf);
  const Vector eigvals = es.eigenvalues();
  const double lam_max = eigvals[eigvals.size() - 1];
  const double floor = 1e-10 * std::max(lam_max, 0.0);
  if (eigvals[0] < floor || lam_max <= 0.0) {
    throw SingularKernel(
        "gen_bound_ntk_inf: H_inf has eigenvalues below the inversion floor",
        floored_eigenvalues(eigvals, floor));
  }
  GenBoundReport rep;
  rep.delta = delta;
  rep.initialization_independent = true;
  rep.lambda_spectrum = eigvals;
  const Vector proj = es.eigenvectors().transpose() * y;
  rep.alignment = proj.cwiseAbs2();
  rep.b_squared = rep.alignment.cwiseQuotient(eigvals).sum();
  rep.rademacher =
      std::sqrt(rep.b_squared) / static_cast<double>(n) * std::sqrt(eigvals.sum());
  rep.bound_rhs =
      std::sqrt(rep.b_squared / static_cast<double>(n)) +
      std::sqrt(std::log(static_cast<double>(n) / delta) /
                static_cast<double>(n));
  return rep;
}

double test_loss_value(TestLoss kind, double f, double y) {
  switch (kind) {
    case TestLoss::ramp:
      return std::min(1.0, std::max(0.0, 1.0 - y * f));
    case TestLoss::squared_capped:
      return std::min(1.0, (f - y) * (f - y));
  }
  return 0.0;
}

double evaluate_test(const ModelParams& params_t, const DataBatch& test,
                     TestLoss kind) {
  validate(test);
  const Matrix Phi = features(params_t, test.X);
  const EquilibriumBatch eq = solve_equilibrium(params_t, Phi);
  const Vector f = predict(params_t, eq.Z);
  double total = 0.0;
  for (Index i = 0; i < test.n; ++i) {
    total += test_loss_value(kind, f[i], test.y[i]);
  }
  return total / static_cast<double>(test.n);
}

double evaluate_test_kernel(const FrozenKernelModel& model,
                            const ModelParams& params0, const DataBatch& test,
                            TestLoss kind, double t) {
  validate(test);
  const Matrix Phi = features(params0, test.X);
  const EquilibriumBatch eq = solve_equilibrium(params0, Phi);
  const Vector f0 = predict(params0, eq.Z);
  const ActivationPattern pat = activation_pattern(params0, eq.Z, Phi);
  const NtkRowBatch rows = ntk_factor_rows(params0, pat);
  const double scale =
      params0.gamma * params0.gamma / static_cast<double>(params0.m);
  double total = 0.0;
  for (Index i = 0; i < test.n; ++i) {
    const Vector krow =
        scale * (model.snapshot.Zrows * eq.Z.row(i).transpose())
                    .cwiseProduct(model.snapshot.Jrows * rows.J.row(i).transpose());
    const double f = f_hat(model, krow, t, f0[i]);
    total += test_loss_value(kind, f, test.y[i]);
  }
  return total / static_cast<double>(test.n);
}

}  // namespace deq
