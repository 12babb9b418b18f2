#ifndef RINGLWR_GRID_HPP
#define RINGLWR_GRID_HPP

#include <cstdint>
#include <vector>

#include "ringlwr/errors.hpp"

namespace ringlwr {

/// Wraps a signed cell index onto [0, n_x) with mathematical modulo.
inline int wrap_index(long long j, int n_x) {
    long long m = j % n_x;
    if (m < 0) m += n_x;
    return static_cast<int>(m);
}

/// Discrete spatio-temporal domain: a ring of circumference ring_length_m
/// split into n_x cells of width dx_m, observed at n_t instants dt_s apart.
/// Space is periodic; cell values sit at cell centers.
struct RingGrid {
    double ring_length_m = 0.0;
    double dt_s = 0.0;
    double dx_m = 0.0;
    int n_t = 0;
    int n_x = 0;

    RingGrid() = default;
    RingGrid(double ring_length, double dt, double dx, int nt, int nx);

    /// Builds a grid from circumference, steps, and time horizon.
    /// n_x = L/dx must be integral; n_t = horizon/dt + 1 rows.
    static RingGrid from_extent(double ring_length, double dt, double dx,
                                double horizon_s);

    double time_at(int i) const { return i * dt_s; }
    double x_at(int j) const { return j * dx_m; }
    /// Nearest cell index for a position on the ring.
    int cell_of(double x) const;

    bool operator==(const RingGrid&) const = default;
};

/// Density (veh/m) or speed (m/s) sampled on a RingGrid, (t, x) order.
class Field {
public:
    Field() = default;
    Field(RingGrid grid, double fill = 0.0);
    Field(RingGrid grid, std::vector<double> values);

    const RingGrid& grid() const { return grid_; }
    int n_t() const { return grid_.n_t; }
    int n_x() const { return grid_.n_x; }

    double operator()(int t, int x) const { return values_[idx(t, x)]; }
    double& operator()(int t, int x) { return values_[idx(t, x)]; }

    /// Periodic access: any signed spatial index is wrapped onto the ring.
    double at_wrapped(int t, long long j) const {
        return values_[static_cast<std::size_t>(t) * grid_.n_x +
                       wrap_index(j, grid_.n_x)];
    }

    const double* row(int t) const { return values_.data() + idx(t, 0); }
    double* row(int t) { return values_.data() + idx(t, 0); }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

private:
    std::size_t idx(int t, int x) const {
        return static_cast<std::size_t>(t) * grid_.n_x + x;
    }
    RingGrid grid_;
    std::vector<double> values_;
};

struct TrajectoryRecord {
    int vehicle_id = 0;
    double t = 0.0; // s
    double x = 0.0; // m, pre-wrapped onto [0, L)
    double v = 0.0; // m/s
};

/// Lagrangian vehicle records. Per-vehicle records must carry strictly
/// increasing timestamps; positions must lie in [0, L).
struct TrajectorySet {
    std::vector<TrajectoryRecord> records;

    bool empty() const { return records.empty(); }
    /// Throws ConfigError naming the offending vehicle/line when the
    /// ordering or range invariants are violated.
    void validate(double ring_length_m) const;
};

/// Sparse observations used for training: the full initial profile plus
/// density time series at fixed detector cells.
struct MeasurementSet {
    std::vector<double> initial_profile;          // length n_x, t = 0
    std::vector<int> detector_positions;          // distinct cells in [0, n_x)
    std::vector<std::vector<double>> detector_series; // [detector][t]

    int n_detectors() const { return static_cast<int>(detector_positions.size()); }
};

/// Reads the t=0 row and the detector columns out of a full field.
/// Duplicate or out-of-range positions are a configuration error.
MeasurementSet subsample_measurements(const Field& field,
                                      const std::vector<int>& detector_positions);

/// Evenly spaced detector cells including one at x = 0.
std::vector<int> evenly_spaced_detectors(int n_detectors, int n_x);

} // namespace ringlwr

#endif
