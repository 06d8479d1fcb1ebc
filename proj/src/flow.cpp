#include "deq/flow.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

namespace deq {

namespace {

struct StageEval {
  Matrix G;       // gradient of L at the stage's A
  Matrix Z;       // stage equilibrium (warm start for the next stage)
  Matrix Xsolve;  // stage row-solve state
  Matrix Jrows;
  Vector u;
  double loss = 0.0;
};

StageEval eval_gradient(const ModelParams& params, const Matrix& Phi,
                        const Vector& y, const Matrix& warmZ,
                        const Matrix& warmX, double tol, double guard) {
  StageEval ev;
  SolveOptions opts;
  opts.tol = tol;
  opts.warm_start = &warmZ;
  opts.spectral_hint = guard;
  EquilibriumBatch eq = solve_equilibrium(params, Phi, opts);
  const ActivationPattern pattern = activation_pattern(params, eq.Z, Phi);
  NtkRowBatch rows = ntk_factor_rows(params, pattern, tol, &warmX, guard);
  ev.u = predict(params, eq.Z);
  ev.loss = 0.5 * (ev.u - y).squaredNorm();
  const double scale = params.gamma / std::sqrt(static_cast<double>(params.m));
  ev.G = scale * eq.Z.transpose() * (ev.u - y).asDiagonal() * rows.J;
  ev.Z = std::move(eq.Z);
  ev.Xsolve = std::move(rows.X);
  ev.Jrows = std::move(rows.J);
  return ev;
}

ModelParams with_A(const ModelParams& base, Matrix A) {
  ModelParams p = base;
  p.A = std::move(A);
  return p;
}

}  // namespace

FlowState make_flow_state(const ModelParams& params, const DataBatch& data,
                          double solve_tol) {
  FlowState s;
  s.params = params;
  s.y = data.y;
  const Matrix Phi = features(params, data.X);
  s.guard = params.gamma * spectral_norm_estimate(params.A).value;
  SolveOptions opts;
  opts.tol = solve_tol;
  opts.spectral_hint = s.guard;
  s.equilibrium = solve_equilibrium(params, Phi, opts);
  const ActivationPattern pattern =
      activation_pattern(params, s.equilibrium.Z, Phi);
  NtkRowBatch rows =
      ntk_factor_rows(params, pattern, solve_tol, nullptr, s.guard);
  s.Jrows = std::move(rows.J);
  s.Xsolve = std::move(rows.X);
  s.u = predict(params, s.equilibrium.Z);
  s.loss = 0.5 * (s.u - data.y).squaredNorm();
  return s;
}

FlowState flow_step(const FlowState& state, double dt, FlowMethod method,
                    double solve_tol) {
  if (!(dt > 0.0)) throw InvalidConfig("flow_step: dt must be positive");
  const Matrix& Phi = state.equilibrium.Phi;
  const Matrix& A = state.params.A;

  // The guard hint stays a valid upper bound when it grows with the step:
  // gamma||A + dA|| <= gamma||A|| + gamma||dA||_F.
  const double g0 = state.guard;

  Matrix Anew;
  if (method == FlowMethod::euler) {
    const StageEval k1 = eval_gradient(state.params, Phi, state.y, state.equilibrium.Z,
                                       state.Xsolve, solve_tol, g0);
    Anew = A - dt * k1.G;
  } else {
    const StageEval k1 = eval_gradient(state.params, Phi, state.y, state.equilibrium.Z,
                                       state.Xsolve, solve_tol, g0);
    const double gs = g0 + state.params.gamma * dt * k1.G.norm();
    const StageEval k2 =
        eval_gradient(with_A(state.params, A - 0.5 * dt * k1.G), Phi, state.y,
                      k1.Z, k1.Xsolve, solve_tol, gs);
    const StageEval k3 =
        eval_gradient(with_A(state.params, A - 0.5 * dt * k2.G), Phi, state.y,
                      k2.Z, k2.Xsolve, solve_tol, gs);
    const StageEval k4 =
        eval_gradient(with_A(state.params, A - dt * k3.G), Phi, state.y, k3.Z,
                      k3.Xsolve, solve_tol, gs);
    Anew = A - (dt / 6.0) * (k1.G + 2.0 * k2.G + 2.0 * k3.G + k4.G);
  }

  FlowState next;
  next.t = state.t + dt;
  next.y = state.y;
  next.params = with_A(state.params, std::move(Anew));
  next.guard =
      g0 + state.params.gamma * (next.params.A - A).norm();
  SolveOptions opts;
  opts.tol = solve_tol;
  opts.warm_start = &state.equilibrium.Z;
  opts.spectral_hint = next.guard;
  next.equilibrium = solve_equilibrium(next.params, Phi, opts);
  const ActivationPattern pattern =
      activation_pattern(next.params, next.equilibrium.Z, Phi);
  NtkRowBatch rows =
      ntk_factor_rows(next.params, pattern, solve_tol, &state.Xsolve, next.guard);
  next.Jrows = std::move(rows.J);
  next.Xsolve = std::move(rows.X);
  next.u = predict(next.params, next.equilibrium.Z);
  next.loss = 0.5 * (next.u - next.y).squaredNorm();

  if (next.loss > state.loss + 1e-9 * (1.0 + state.loss)) {
    throw StepRejected("flow_step: loss increased from " +
                       std::to_string(state.loss) + " to " +
                       std::to_string(next.loss));
  }
  return next;
}

FlowTrace train(const DataBatch& data, const ModelParams& params0,
                const FlowSchedule& schedule, const TrainHooks& hooks) {
  validate(data);
  FlowTrace trace;
  FlowState state = make_flow_state(params0, data, schedule.solve_tol);

  trace.A0 = params0.A;
  trace.Z0 = state.equilibrium.Z;
  trace.u0 = state.u;
  trace.H0 = gram_from_rows(params0, state.equilibrium.Z, state.Jrows, 0.0);
  trace.lambda_bar = trace.H0.lambda_min;

  if (trace.H0.lambda_min <= 0.0) {
    std::cerr << "train: warning: lambda_min(H(0)) = " << trace.H0.lambda_min
              << " <= 0; linear convergence hypothesis fails\n";
  }

  const double lam_max =
      trace.H0.eigenvalues[trace.H0.eigenvalues.size() - 1];
  double dt = schedule.dt > 0.0
                  ? schedule.dt
                  : schedule.dt_auto_factor / std::max(lam_max, 1e-12);
  const double t_end =
      schedule.t_end > 0.0
          ? schedule.t_end
          : schedule.t_end_auto_factor / std::max(trace.H0.lambda_min, 1e-12);
  trace.dt_used = dt;

  const double r0sq = (state.u - data.y).squaredNorm();

  const auto record = [&](FlowState& s) {
    FlowRecord r;
    r.t = s.t;
    r.loss = s.loss;
    r.res_norm = (s.u - data.y).norm();
    const GramSnapshot Ht =
        gram_from_rows(s.params, s.equilibrium.Z, s.Jrows, s.t);
    if (s.t > 0.0) {
      trace.lambda_bar = std::min(trace.lambda_bar, Ht.lambda_min);
    }
    r.lambda_min = Ht.lambda_min;
    const auto drift = gram_drift(Ht, trace.H0);
    r.h_drift_spec = drift.first;
    r.h_drift_fro = drift.second;
    r.a_drift = (s.params.A - trace.A0).norm();
    r.z_drift = (s.equilibrium.Z - trace.Z0).norm();
    r.guard = s.params.gamma * spectral_norm_estimate(s.params.A).value;
    // Reset the accumulated upper bound to the measured value so it cannot
    // creep toward 1 over long runs.
    s.guard = r.guard;
    r.envelope = std::exp(-trace.lambda_bar * s.t) * r0sq;
    r.u = s.u;
    trace.records.push_back(std::move(r));
    if (hooks.on_record) hooks.on_record(s, trace.records.back());
  };

  record(state);

  int step = 0;
  int halvings = 0;
  while (state.t < t_end * (1.0 - 1e-12)) {
    const double step_dt = std::min(dt, t_end - state.t);
    double tol = schedule.solve_tol;
    if (schedule.adaptive_tol) {
      const double res = (state.u - data.y).norm();
      tol = std::min(schedule.solve_tol,
                     std::max(1e-5 * res, 1e-15 * (1.0 + state.equilibrium.Phi.norm())));
    }
    try {
      state = flow_step(state, step_dt, schedule.method, tol);
    } catch (const StepRejected&) {
      if (++halvings > 40) {
        trace.aborted = true;
        trace.abort_reason = "step size underflow after repeated rejections";
        break;
      }
      dt *= 0.5;
      continue;
    } catch (const NonContractive& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      break;
    } catch (const MaxIterExceeded& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      break;
    }
    ++step;
    if (hooks.on_step) hooks.on_step(state);
    const bool at_end = state.t >= t_end * (1.0 - 1e-12);
    const bool at_record =
        step % std::max(1, schedule.record_every) == 0 || at_end;
    if (at_record) record(state);
    if (at_record && schedule.stop_loss > 0.0 &&
        state.loss <= schedule.stop_loss) {
      break;
    }
  }
  return trace;
}

double du_dt_consistency(const FlowState& state) {
  const GramSnapshot Ht =
      gram_from_rows(state.params, state.equilibrium.Z, state.Jrows, state.t);
  const double lam_max = Ht.eigenvalues[Ht.eigenvalues.size() - 1];
  const double h = 1e-4 * 0.1 / std::max(lam_max, 1e-12);

  const double tol = 1e-13;
  const FlowState plus = flow_step(state, h, FlowMethod::rk4, tol);
  // Backward probe: integrate the reversed field for time h.
  FlowState back = state;
  {
    const Matrix& Phi = state.equilibrium.Phi;
    const Matrix& A = state.params.A;
    const double g0 = state.guard + 1e-3;
    const StageEval k1 = eval_gradient(state.params, Phi, state.y,
                                       state.equilibrium.Z, state.Xsolve, tol, g0);
    const StageEval k2 =
        eval_gradient(with_A(state.params, A + 0.5 * h * k1.G), Phi, state.y,
                      k1.Z, k1.Xsolve, tol, g0);
    const StageEval k3 =
        eval_gradient(with_A(state.params, A + 0.5 * h * k2.G), Phi, state.y,
                      k2.Z, k2.Xsolve, tol, g0);
    const StageEval k4 = eval_gradient(with_A(state.params, A + h * k3.G), Phi,
                                       state.y, k3.Z, k3.Xsolve, tol, g0);
    back.params =
        with_A(state.params,
               A + (h / 6.0) * (k1.G + 2.0 * k2.G + 2.0 * k3.G + k4.G));
    SolveOptions opts;
    opts.tol = tol;
    opts.warm_start = &state.equilibrium.Z;
    opts.spectral_hint = g0;
    back.equilibrium = solve_equilibrium(back.params, Phi, opts);
    back.u = predict(back.params, back.equilibrium.Z);
  }

  const Vector fd = (plus.u - back.u) / (2.0 * h);
  return (fd + Ht.H * (state.u - state.y)).norm();
}

const char* const kTraceCsvHeader =
    "t,loss,res_norm,lambda_min,h_drift_spec,h_drift_fro,a_drift,z_drift,"
    "guard,envelope";

std::string trace_csv_row(const FlowRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                r.t, r.loss, r.res_norm, r.lambda_min, r.h_drift_spec,
                r.h_drift_fro, r.a_drift, r.z_drift, r.guard, r.envelope);
  return std::string(buf);
}

}  // namespace deq
