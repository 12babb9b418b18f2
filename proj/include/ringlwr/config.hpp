#ifndef RINGLWR_CONFIG_HPP
#define RINGLWR_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ringlwr/fd.hpp"
#include "ringlwr/grid.hpp"

namespace ringlwr {

enum class KernelKind { Local, Constant, Linear, Learned };
enum class FdKind { Greenshields, Underwood, Drake, Learned };

KernelKind kernel_kind_from_name(std::string_view name);
std::string kernel_kind_name(KernelKind k);
FdKind fd_kind_from_name(std::string_view name);
std::string fd_kind_name(FdKind k);

/// Flat-sectioned key=value experiment description. All lengths are meters,
/// times seconds, densities veh/m, speeds m/s; key names carry the unit.
struct ExperimentConfig {
    // [grid]
    double ring_length_m = 800.0;
    double dx_m = 1.0;
    double dt_s = 1.0;
    double horizon_s = 200.0;

    // [solver] - ground-truth generation
    FdParams solver_fd; // greenshields v_f=30 rho_m=0.2 rho_c=0.08 defaults
    KernelKind solver_kernel = KernelKind::Linear;
    double solver_eta_m = 40.0;
    bool solver_eta_set = false;
    double cfl_safety = 0.9;
    double init_rho_bar_vpm = 0.05;
    double init_amplitude_vpm = 0.02;
    int n_vehicles = 40;

    // [kde]
    double bandwidth_x_m = 10.0;
    double bandwidth_t_s = 2.0;

    // [training]
    FdKind train_fd = FdKind::Learned;
    KernelKind train_kernel = KernelKind::Learned;
    double train_eta_m = 0.0; // 0 = inherit solver_eta_m
    int density_hidden_layers = 3;
    int density_hidden_width = 32;
    int fd_hidden_layers = 2;
    int fd_hidden_width = 16;
    double rho_scale_vpm = 0.0; // 0 = inherit solver rho_m
    double v_scale_mps = 0.0;   // 0 = inherit solver v_f
    int adam_iters = 5000;
    int lbfgs_iters = 500;
    double adam_lr = 1e-3;
    double alpha_initial = 1.0;
    std::vector<double> alpha_detector; // empty = all 1; scalar broadcasts
    double p_omega_1 = 1e4, p_omega_2 = 1e4, p_v_1 = 1e4, p_v_2 = 1e4;
    int n_collocation = 512;
    int n_detectors = 5;
    int n_rho_grid = 100;
    std::optional<std::uint64_t> seed; // required: no nondeterministic default
    int checkpoint_every = 0;          // 0 = final checkpoint only
    std::vector<double> sweep_etas;
    std::vector<double> sweep_alphas;

    // [paths]
    std::string out_dir;
    std::string trajectories;
    std::string observed_rho;
    std::string truth_rho;
    std::string truth_v;
    std::string estimate_rho;
    std::string estimate_v;

    /// Grid implied by the [grid] section.
    RingGrid grid() const;
    /// Training-side kernel length (inherits the solver's when unset).
    double effective_train_eta() const;
    double effective_rho_scale() const;
    double effective_v_scale() const;

    /// Per-section checks, so each operation validates only what it reads.
    /// Seed presence is checked by require_seed, since `simulate` of a
    /// deterministic scheme needs none.
    void validate_grid() const;
    void validate_solver() const;
    void validate_kde() const;
    void validate_training() const;
    void validate() const;
    std::uint64_t require_seed() const;
};

/// Parses a config file. Unknown sections or keys are configuration errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::string_view text, const std::string& name);

/// Canonical echo of the effective config (defaults resolved); parsing the
/// echo reproduces the same configuration.
std::string render_config(const ExperimentConfig& cfg);

} // namespace ringlwr

#endif
