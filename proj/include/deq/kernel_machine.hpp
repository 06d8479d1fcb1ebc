#ifndef DEQ_KERNEL_MACHINE_HPP
#define DEQ_KERNEL_MACHINE_HPP

#include <limits>
#include <optional>
#include <vector>

#include "deq/core.hpp"
#include "deq/flow.hpp"
#include "deq/model.hpp"
#include "deq/ntk.hpp"

namespace deq {

// Linearized (frozen-kernel) dynamics built on the eigendecomposition of
// H(0):  y - u_hat(t) = e^{-H(0) t} (y - u(0)).
struct FrozenKernelModel {
  Matrix eigvecs;     // n x n orthogonal
  Vector eigvals;     // ascending, >= 0 up to round-off
  Vector residual0;   // y - u(0)
  Vector u0;
  Vector y;
  double eig_floor = 0.0;  // 1e-10 * lambda_max; inversion below it refuses
  std::optional<Vector> alpha_inf;  // H(0)^{-1} (y - u(0)) when invertible
  GramSnapshot snapshot;            // factors kept for kernel rows on queries
};

FrozenKernelModel build_frozen_model(const GramSnapshot& H0, const Vector& u0,
                                     const Vector& y);

// u_hat(t) = y - Q e^{-Lambda t} Q^T (y - u(0)).
Vector u_hat(const FrozenKernelModel& model, double t);

constexpr double kTimeInfinity = std::numeric_limits<double>::infinity();

// f_hat_t(x0) = f0(x0) + k_0(x0,X) Q g(Lambda,t) Q^T (y - u(0)) with
// g(lambda,t) = (1 - e^{-lambda t})/lambda and the lambda->0 limit t.
// At t = infinity uses alpha_inf (throws SingularKernel below the floor).
double f_hat(const FrozenKernelModel& model, const Vector& kernel_row, double t,
             double f0_x0);

// ||u(t_k) - u_hat(t_k)|| at every recorded trace point.
std::vector<double> coupling_gap_train(const FlowTrace& trace,
                                       const FrozenKernelModel& model);

struct GenBoundReport {
  double b_squared = 0.0;   // (y-u0)^T H(0)^{-1} (y-u0)
  double rademacher = 0.0;  // (B/n) sqrt(trace H(0))
  double bound_rhs = 0.0;   // sqrt(B^2/n) + sqrt(log(1/delta)/n)
  double delta = 0.0;
  Vector lambda_spectrum;   // ascending
  Vector alignment;         // (q_i^T (y-u0))^2, same order as the spectrum
  std::optional<double> test_error;
  bool initialization_independent = false;
};

GenBoundReport gen_bound(const FrozenKernelModel& model, double delta, int n);

// Same report shape against the limiting kernel with u(0) replaced by 0 and
// the sqrt(log(n/delta)/n) tail.
GenBoundReport gen_bound_ntk_inf(const LimitingKernelEstimate& H_inf,
                                 const Vector& y, double delta, int n);

enum class TestLoss { ramp, squared_capped };

// ramp: min(1, max(0, 1 - y*f)); squared_capped: min(1, (f-y)^2).
double test_loss_value(TestLoss kind, double f, double y);

// Empirical mean loss of the trained network f_t on a test batch.
double evaluate_test(const ModelParams& params_t, const DataBatch& test,
                     TestLoss kind = TestLoss::ramp);

// Empirical mean loss of the kernel machine f_hat_t (default t = infinity);
// params0 supplies f_0 and the kernel rows at initialization.
double evaluate_test_kernel(const FrozenKernelModel& model,
                            const ModelParams& params0, const DataBatch& test,
                            TestLoss kind = TestLoss::ramp,
                            double t = kTimeInfinity);

}  // namespace deq

#endif  // DEQ_KERNEL_MACHINE_HPP
