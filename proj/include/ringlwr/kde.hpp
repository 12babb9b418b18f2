#ifndef RINGLWR_KDE_HPP
#define RINGLWR_KDE_HPP

#include <cstdint>
#include <vector>

#include "ringlwr/grid.hpp"

namespace ringlwr {

/// Gaussian product-kernel estimator settings. Bandwidths are standard
/// deviations of the space and time Gaussians.
struct KdeConfig {
    double bandwidth_x_m = 10.0;
    double bandwidth_t_s = 2.0;
    RingGrid grid;

    void validate() const;
};

/// Density field from vehicle records: each record deposits a normalized
/// space-time Gaussian, wrapped over ring images |m| <= 3, weighted by the
/// record's sampling interval so the spatial integral near interior times
/// approximates the vehicle count at any sampling rate.
Field reconstruct_density(const TrajectorySet& traj, const KdeConfig& cfg);

/// Nadaraya-Watson speed with the density weights. Cells whose total weight
/// falls below 1e-12 take the value of the nearest resolvable cell (grid
/// distance, x wrapped); `fallback_mask`, when given, is sized n_t*n_x and
/// set to 1 at those cells.
Field reconstruct_speed(const TrajectorySet& traj, const KdeConfig& cfg,
                        std::vector<std::uint8_t>* fallback_mask = nullptr);

/// Virtual probe vehicles: n_vehicles particles start at equal headways and
/// follow dx/dt = v(t, x) (forward Euler on the grid clock, speed linearly
/// interpolated around the ring). One record per particle per time row.
TrajectorySet synth_trajectories(const Field& speed_field, int n_vehicles);

} // namespace ringlwr

#endif
