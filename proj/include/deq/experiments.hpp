#ifndef DEQ_EXPERIMENTS_HPP
#define DEQ_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deq/data.hpp"
#include "deq/flow.hpp"
#include "deq/kernel_machine.hpp"
#include "deq/model.hpp"

namespace deq {

enum class ExperimentKind {
  convergence,
  coupling_sweep,
  genbound,
  ntk_limit,
  mnist_width_sweep,
};

struct DatasetSpec {
  bool mnist = false;
  // synthetic
  SyntheticKind synthetic_kind = SyntheticKind::random_labels;
  int n = 0;
  int d = 0;
  double separation = 0.8;
  int test_n = 0;
  // mnist (IDX files supplied by the user)
  std::string images, labels, test_images, test_labels;
  int class_a = 0, class_b = 1;
  int count = 0, test_count = 0;
  // seed for the data draw / subsample, shared by every sweep cell
  std::uint64_t data_seed = 1;
};

struct ModelSpec {
  std::vector<int> m_list;  // single-width experiments use one entry
  double gamma0 = 0.5;
  Scheme scheme = Scheme::diagonal_a;
  PhiKind phi_kind = PhiKind::relu;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::convergence;
  DatasetSpec dataset;
  ModelSpec model;
  FlowSchedule schedule;
  std::vector<std::uint64_t> seeds;
  double delta = 0.05;
  std::string output_dir = "out";
  // ntk_limit
  int mc_reps = 64;
  int mc_width = 0;  // 0 -> max of m_list
  // mnist_width_sweep
  double loss_threshold = 1e-3;
  // coupling_sweep
  int probe_points = 20;
};

// Strict parser: unknown keys are errors, not warnings.
ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical resolved form; the run directory name hashes this.
std::string canonical_config_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

DataBatch build_dataset(const DatasetSpec& spec);
DataBatch build_test_dataset(const DatasetSpec& spec);

// ---- per-experiment runners (also used directly by the acceptance suite)

struct ConvergenceRun {
  std::uint64_t seed = 0;
  FlowTrace trace;
};
std::vector<ConvergenceRun> run_convergence(const ExperimentConfig& cfg,
                                            int threads);

struct SweepCellStats {
  int m = 0;
  std::uint64_t seed = 0;
  double lambda_min0 = 0.0;
  double lambda_max0 = 0.0;
  double max_u_gap = 0.0;   // max_t ||u(t) - u_hat(t)||, tracked every step
  double f_gap = 0.0;       // max over probe points |f_t(x0) - f_hat_t(x0)|
  double h_drift_spec = 0.0;
  double h_drift_fro = 0.0;
  double a_drift = 0.0;
  double z_drift = 0.0;
  double guard_max = 0.0;
  int steps = 0;
  bool aborted = false;
  std::string trace_csv;  // full trace, written by the collector
};

struct CouplingSweepResult {
  double t_star = 0.0;  // shared physical horizon across widths
  std::vector<SweepCellStats> cells;
  std::vector<int> widths;                 // ascending
  std::vector<double> median_u_gap;        // per width
  std::vector<double> median_f_gap;
  std::vector<double> median_h_drift_spec;
  double h_drift_loglog_slope = 0.0;
};
CouplingSweepResult run_coupling_sweep(const ExperimentConfig& cfg,
                                       int threads);

struct GenboundRun {
  std::uint64_t seed = 0;
  GenBoundReport report;       // test_error filled from the kernel machine
  double leading_term = 0.0;   // sqrt(B^2 / n)
};
std::vector<GenboundRun> run_genbound(const ExperimentConfig& cfg, int threads);

struct NtkLimitCell {
  int m = 0;
  std::uint64_t seed = 0;
  double dist_fro = 0.0;  // ||H(0)_m - H_inf_mc||_F
};
struct NtkLimitResult {
  LimitingKernelEstimate mc;
  std::vector<NtkLimitCell> cells;
  std::vector<int> widths;
  std::vector<double> median_dist;
  double loglog_slope = 0.0;
};
NtkLimitResult run_ntk_limit(const ExperimentConfig& cfg, int threads);

struct MnistCheckpoint {
  double t = 0.0;
  double loss = 0.0;
  double test_ramp = 0.0;
};
struct MnistCellResult {
  int m = 0;
  std::uint64_t seed = 0;
  double time_to_threshold = -1.0;  // < 0 when the threshold was not reached
  double final_loss = 0.0;
  std::vector<MnistCheckpoint> checkpoints;
  bool test_monotone_after_first = false;
  std::string trace_csv;
};
struct MnistSweepResult {
  std::vector<MnistCellResult> cells;
  std::vector<int> widths;
  std::vector<double> median_time_to_threshold;  // per width, -1 if unreached
};
MnistSweepResult run_mnist_width_sweep(const ExperimentConfig& cfg,
                                       int threads);

// Dispatches on cfg.experiment, writes CSV/JSON/SVG artifacts plus a
// manifest under <output_dir>/<experiment>_<hash>/ . Returns the run
// directory. Errors propagate after a partial manifest is written.
std::string run_experiment(const ExperimentConfig& cfg, int threads);

// Report serialization with fixed field names.
std::string genbound_report_json(const GenBoundReport& report);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
double median_of(std::vector<double> values);

}  // namespace deq

#endif  // DEQ_EXPERIMENTS_HPP
