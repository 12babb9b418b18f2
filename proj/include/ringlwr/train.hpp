#ifndef RINGLWR_TRAIN_HPP
#define RINGLWR_TRAIN_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ringlwr/config.hpp"
#include "ringlwr/eval.hpp"
#include "ringlwr/loss.hpp"
#include "ringlwr/solver.hpp"

namespace ringlwr {

/// Ground-truth side of a twin experiment.
struct TwinArtifacts {
    SolverConfig solver;
    Field truth_rho;
    Field truth_v; // speed field implied by the generator's FD and kernel
};

/// Simulates the configured generator with enough sub-steps to satisfy the
/// CFL bound on the output grid.
TwinArtifacts simulate_twin(const ExperimentConfig& cfg);

/// Builds the generator's discrete kernel (nullopt when local).
std::optional<DiscreteKernel> solver_kernel(const ExperimentConfig& cfg);

/// Assembles the training objective description from a config and the
/// observed field: t = 0 profile plus evenly spaced detector columns.
/// Collocation points come from the "collocation" stream of `seed`.
PinnProblem build_problem(const ExperimentConfig& cfg, const Field& observed,
                          std::uint64_t seed);

struct TrainSettings {
    int adam_iters = 5000;
    double adam_lr = 1e-3;
    int lbfgs_iters = 500;
    int trace_every = 10;        // trace row cadence (first/last always kept)
    int checkpoint_every = 0;    // iterations between checkpoints, 0 = final only
    std::string checkpoint_path; // empty = never write checkpoints
    std::string trace_path;      // empty = keep the trace in memory only
    std::string resume_from;     // checkpoint to continue from
    std::ostream* log = nullptr;
    int log_every = 200;
};

TrainSettings settings_from_config(const ExperimentConfig& cfg);

struct TrainResult {
    std::vector<double> params;
    std::vector<LossTraceRow> trace;
    PinnLoss::Parts final_parts;
    int adam_done = 0;
    int lbfgs_done = 0;
    bool lbfgs_converged = false;
    std::string lbfgs_diagnostic;
};

/// ADAM phase then L-BFGS phase over the objective, with optional trace,
/// checkpointing, and bit-exact resume. Parameters start from the loss's
/// initial vector unless a checkpoint is resumed.
TrainResult run_training(PinnLoss& loss, const TrainSettings& settings);

/// Metrics of a trained model against held-out truth.
struct ReportMetrics {
    std::optional<double> e_rho_pct;
    std::optional<double> e_v_pct;
    std::optional<double> kernel_mass_frac_10m;
};

/// Writes summary.txt, field_est.csv, kernel.csv, fd_curve.csv, and
/// loss_trace.csv into `report_dir`; an empty dir computes the metrics
/// without touching the filesystem.
ReportMetrics export_report(const std::string& report_dir, const ExperimentConfig& cfg,
                            PinnLoss& loss, const TrainResult& result,
                            const std::optional<Field>& truth_rho,
                            const std::optional<Field>& truth_v);

/// One full twin training run: build problem, train, export (when
/// report_dir is non-empty), evaluate against truth when provided.
struct RunOutcome {
    TrainResult result;
    ReportMetrics metrics;
};

RunOutcome run_experiment(const ExperimentConfig& cfg, const Field& observed,
                          const std::optional<Field>& truth_rho,
                          const std::optional<Field>& truth_v,
                          const std::string& report_dir, const TrainSettings& settings);

/// Repeats the experiment across kernel supports. A failing support is
/// recorded and the sweep continues.
struct EtaSweepRow {
    double eta_m = 0.0;
    bool ok = false;
    std::string error;
    double mass_frac_10m = 0.0;
    double e_rho_pct = 0.0;
    double loss_total = 0.0;
};

std::vector<EtaSweepRow> eta_sweep(const ExperimentConfig& cfg, const Field& observed,
                                   const std::optional<Field>& truth_rho,
                                   const std::optional<Field>& truth_v,
                                   const std::vector<double>& etas,
                                   const std::string& out_dir, std::ostream* log);

std::string render_eta_sweep(const std::vector<EtaSweepRow>& rows);

/// Repeats the experiment across data-weight scales: every detector weight
/// is alpha, the initial-profile weight stays at its configured value.
struct AlphaSweepRow {
    double alpha = 0.0;
    bool ok = false;
    std::string error;
    double e_rho_pct = 0.0;
    double loss_total = 0.0;
};

std::vector<AlphaSweepRow> alpha_sweep(const ExperimentConfig& cfg, const Field& observed,
                                       const std::optional<Field>& truth_rho,
                                       const std::optional<Field>& truth_v,
                                       const std::vector<double>& alphas,
                                       const std::string& out_dir, std::ostream* log);

std::string render_alpha_sweep(const std::vector<AlphaSweepRow>& rows);

} // namespace ringlwr

#endif
