#ifndef RINGLWR_SOLVER_HPP
#define RINGLWR_SOLVER_HPP

#include <optional>
#include <vector>

#include "ringlwr/fd.hpp"
#include "ringlwr/grid.hpp"
#include "ringlwr/kernel.hpp"

namespace ringlwr {

/// Forward-simulation setup. Without a kernel the model is local LWR
/// (speed from the cell's own density); with one, speed responds to the
/// kernel-weighted look-ahead density.
struct SolverConfig {
    RingGrid grid;
    FdParams fd;
    std::optional<DiscreteKernel> kernel;
    std::vector<double> initial_profile; // veh/m, length n_x
    double cfl_safety = 0.9;

    void validate() const;
};

/// out[j] = sum_k rho_row[(j+k) mod n_x] * w_k. Periodic look-ahead average.
void nonlocal_density(const double* rho_row, int n_x,
                      const DiscreteKernel& kernel, double* out);
std::vector<double> nonlocal_density(const std::vector<double>& rho_row,
                                     const DiscreteKernel& kernel);

/// One conservative upwind step. Velocities are non-negative, so the flux
/// through face j+1/2 is rho_j * V(rho_eta_j) and mass telescopes exactly.
/// Throws SolverError when dt * max V exceeds cfl_safety * dx.
std::vector<double> step(const std::vector<double>& state,
                         const SolverConfig& config);

/// Rolls `step` across the grid horizon; row 0 is the initial profile.
Field simulate(const SolverConfig& config);

/// Runs on a refinement of the time grid (dt/n_sub) and returns every
/// n_sub-th row on the original grid. n_sub is the caller's explicit choice;
/// the CFL check still applies to the fine step.
Field simulate_substepped(const SolverConfig& config, int n_sub);

/// Smallest sub-step count that satisfies the CFL bound when speeds never
/// exceed v_max.
int required_substeps(const RingGrid& grid, double v_max, double cfl_safety);

/// Synthetic twin initial condition: rho_bar + amplitude * sin(2*pi*x/L).
std::vector<double> twin_initial_profile(const RingGrid& grid,
                                         double rho_bar = 0.05,
                                         double amplitude = 0.02);

} // namespace ringlwr

#endif
