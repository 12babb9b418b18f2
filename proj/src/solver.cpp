#include "ringlwr/solver.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ringlwr/field_io.hpp"

namespace ringlwr {

void SolverConfig::validate() const {
    fd.validate();
    if (static_cast<int>(initial_profile.size()) != grid.n_x) {
        throw ShapeError("initial profile has " +
                         std::to_string(initial_profile.size()) +
                         " cells, grid has " + std::to_string(grid.n_x));
    }
    for (double r : initial_profile) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw ConfigError("initial profile must be non-negative and finite");
        }
    }
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0) {
        throw ConfigError("cfl_safety must lie in (0, 1]");
    }
    if (kernel) {
        kernel->validate();
        if (kernel->dx_m != grid.dx_m) {
            throw ConfigError("kernel cell width " + format_double(kernel->dx_m) +
                              " does not match grid dx " + format_double(grid.dx_m));
        }
        if (kernel->size() > grid.n_x) {
            throw ConfigError("kernel support exceeds ring circumference");
        }
    }
}

void nonlocal_density(const double* rho_row, int n_x,
                      const DiscreteKernel& kernel, double* out) {
    int n_k = kernel.size();
    for (int j = 0; j < n_x; ++j) {
        double acc = 0.0;
        int base = j;
        for (int k = 0; k < n_k; ++k) {
            int idx = base + k;
            if (idx >= n_x) idx -= n_x; // n_k <= n_x images suffice after validate
            acc += rho_row[idx] * kernel.weights[k];
        }
        out[j] = acc;
    }
}

std::vector<double> nonlocal_density(const std::vector<double>& rho_row,
                                     const DiscreteKernel& kernel) {
    if (kernel.size() > static_cast<int>(rho_row.size())) {
        throw ConfigError("kernel support exceeds ring circumference");
    }
    std::vector<double> out(rho_row.size());
    nonlocal_density(rho_row.data(), static_cast<int>(rho_row.size()), kernel, out.data());
    return out;
}

namespace {

/// Shared core: advances `rho` in place by one step of width dt.
void step_in_place(std::vector<double>& rho, std::vector<double>& rho_eta,
                   std::vector<double>& flux, const SolverConfig& cfg,
                   double dt) {
    const int n = cfg.grid.n_x;
    const double dx = cfg.grid.dx_m;

    const double* eval_rho;
    if (cfg.kernel) {
        nonlocal_density(rho.data(), n, *cfg.kernel, rho_eta.data());
        eval_rho = rho_eta.data();
    } else {
        eval_rho = rho.data();
    }

    double v_max = 0.0;
    for (int j = 0; j < n; ++j) {
        double v = fd_eval(cfg.fd, eval_rho[j]);
        if (v > v_max) v_max = v;
        flux[j] = rho[j] * v;
    }
    if (dt * v_max > cfg.cfl_safety * dx) {
        throw SolverError("CFL violated: max speed " + format_double(v_max) +
                          " m/s needs dt <= " +
                          format_double(cfg.cfl_safety * dx / v_max) + " s, have " +
                          format_double(dt) + " s");
    }

    double prev = flux[n - 1];
    double coeff = dt / dx;
    for (int j = 0; j < n; ++j) {
        double f = flux[j];
        rho[j] -= coeff * (f - prev);
        prev = f;
    }
}

} // namespace

std::vector<double> step(const std::vector<double>& state,
                         const SolverConfig& config) {
    config.validate();
    if (state.size() != config.initial_profile.size()) {
        throw ShapeError("state length does not match grid");
    }
    std::vector<double> rho = state;
    std::vector<double> rho_eta(rho.size()), flux(rho.size());
    step_in_place(rho, rho_eta, flux, config, config.grid.dt_s);
    return rho;
}

Field simulate(const SolverConfig& config) {
    return simulate_substepped(config, 1);
}

Field simulate_substepped(const SolverConfig& config, int n_sub) {
    config.validate();
    if (n_sub < 1) throw ConfigError("sub-step count must be >= 1");
    const RingGrid& g = config.grid;
    Field out(g);
    std::vector<double> rho = config.initial_profile;
    std::vector<double> rho_eta(rho.size()), flux(rho.size());
    double dt_fine = g.dt_s / n_sub;
    for (int j = 0; j < g.n_x; ++j) out(0, j) = rho[j];
    for (int i = 1; i < g.n_t; ++i) {
        for (int s = 0; s < n_sub; ++s) {
            try {
                step_in_place(rho, rho_eta, flux, config, dt_fine);
            } catch (const SolverError& e) {
                throw SolverError("at output step " + std::to_string(i) +
                                  (n_sub > 1 ? ", sub-step " + std::to_string(s) : "") +
                                  ": " + e.what());
            }
        }
        for (int j = 0; j < g.n_x; ++j) out(i, j) = rho[j];
    }
    return out;
}

int required_substeps(const RingGrid& grid, double v_max, double cfl_safety) {
    if (!(v_max > 0.0)) return 1;
    if (!(cfl_safety > 0.0)) throw ConfigError("cfl_safety must be positive");
    double ratio = grid.dt_s * v_max / (cfl_safety * grid.dx_m);
    int n = static_cast<int>(std::ceil(ratio - 1e-12));
    return n < 1 ? 1 : n;
}

std::vector<double> twin_initial_profile(const RingGrid& grid, double rho_bar,
                                         double amplitude) {
    std::vector<double> out(grid.n_x);
    double two_pi_over_l = 2.0 * std::numbers::pi / grid.ring_length_m;
    for (int j = 0; j < grid.n_x; ++j) {
        out[j] = rho_bar + amplitude * std::sin(two_pi_over_l * grid.x_at(j));
    }
    return out;
}

} // namespace ringlwr
