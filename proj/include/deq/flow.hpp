#ifndef DEQ_FLOW_HPP
#define DEQ_FLOW_HPP

#include <functional>
#include <string>
#include <vector>

#include "deq/core.hpp"
#include "deq/implicit.hpp"
#include "deq/model.hpp"
#include "deq/ntk.hpp"

namespace deq {

enum class FlowMethod { euler, rk4 };

// One accepted point on the gradient-flow trajectory dA/dt = -grad L(A).
// W and b stay frozen; Phi never changes along the flow.
struct FlowState {
  double t = 0.0;
  ModelParams params;
  EquilibriumBatch equilibrium;
  Vector u;
  double loss = 0.0;  // 0.5 ||u - y||^2
  Vector y;
  Matrix Jrows;  // NTK rows at the current A
  Matrix Xsolve; // unmasked row-solve state (warm start)
  double guard = 0.0;  // gamma * ||A|| upper bound maintained along the flow
};

FlowState make_flow_state(const ModelParams& params, const DataBatch& data,
                          double solve_tol = 1e-10);

// Advances by one integrator step, re-solving the equilibrium at every stage.
// Throws StepRejected when the loss increases by more than 1e-9*(1+loss),
// NonContractive when well-posedness is lost.
FlowState flow_step(const FlowState& state, double dt,
                    FlowMethod method = FlowMethod::rk4,
                    double solve_tol = 1e-10);

struct FlowRecord {
  double t = 0.0;
  double loss = 0.0;
  double res_norm = 0.0;     // ||u - y||
  double lambda_min = 0.0;   // of H(t)
  double h_drift_spec = 0.0; // ||H(t) - H(0)||
  double h_drift_fro = 0.0;
  double a_drift = 0.0;      // ||A(t) - A(0)||_F
  double z_drift = 0.0;      // ||Z(t) - Z(0)||_F
  double guard = 0.0;        // gamma * ||A(t)||
  double envelope = 0.0;     // e^{-lambda_bar t} ||u(0) - y||^2
  Vector u;                  // kept in memory for kernel-machine coupling
};

struct FlowSchedule {
  double t_end = 0.0;      // <= 0: t_end_auto_factor / lambda_min(H(0))
  double dt = 0.0;         // <= 0: dt_auto_factor / lambda_max(H(0))
  int record_every = 10;   // steps between Gram recomputations
  FlowMethod method = FlowMethod::rk4;
  double solve_tol = 1e-10;
  bool adaptive_tol = true;  // tighten the solver as ||u - y|| shrinks
  double t_end_auto_factor = 5.0;
  double dt_auto_factor = 0.1;
  double stop_loss = 0.0;  // > 0: stop at the first record with loss <= it
};

struct TrainHooks {
  std::function<void(const FlowState&)> on_step;  // every accepted step
  std::function<void(const FlowState&, const FlowRecord&)> on_record;
};

struct FlowTrace {
  std::vector<FlowRecord> records;
  GramSnapshot H0;
  Vector u0;
  Matrix A0;
  Matrix Z0;
  double lambda_bar = 0.0;  // running min over recorded lambda_min(H(s))
  double dt_used = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

// Integrates the flow over the schedule, recording every record_every steps
// (plus t=0 and the final point). Warns to stderr when lambda_min(H(0)) <= 0.
// On NonContractive the partial trace is returned with aborted set.
FlowTrace train(const DataBatch& data, const ModelParams& params0,
                const FlowSchedule& schedule, const TrainHooks& hooks = {});

// || (u(t+h) - u(t-h)) / 2h + H(t)(u(t) - y) || with fresh forward solves;
// O(h^2) plus solver tolerance.
double du_dt_consistency(const FlowState& state);

// Fixed CSV schema shared with the experiment outputs.
extern const char* const kTraceCsvHeader;
std::string trace_csv_row(const FlowRecord& r);

}  // namespace deq

#endif  // DEQ_FLOW_HPP
