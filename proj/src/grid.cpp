#include "ringlwr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace ringlwr {

namespace {

void check_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string(name) + " must be a positive finite number");
    }
}

} // namespace

RingGrid::RingGrid(double ring_length, double dt, double dx, int nt, int nx)
    : ring_length_m(ring_length), dt_s(dt), dx_m(dx), n_t(nt), n_x(nx) {
    check_positive(ring_length_m, "ring_length_m");
    check_positive(dt_s, "dt_s");
    check_positive(dx_m, "dx_m");
    if (n_t < 2) throw ConfigError("n_t must be at least 2");
    if (n_x < 2) throw ConfigError("n_x must be at least 2");
    if (n_x * dx_m != ring_length_m) {
        throw ConfigError("n_x * dx_m must equal ring_length_m exactly (got " +
                          std::to_string(n_x * dx_m) + " vs " +
                          std::to_string(ring_length_m) + ")");
    }
}

RingGrid RingGrid::from_extent(double ring_length, double dt, double dx,
                               double horizon_s) {
    check_positive(ring_length, "ring_length_m");
    check_positive(dt, "dt_s");
    check_positive(dx, "dx_m");
    check_positive(horizon_s, "horizon_s");
    double nx_real = ring_length / dx;
    int nx = static_cast<int>(std::llround(nx_real));
    if (nx < 2 || nx * dx != ring_length) {
        throw ConfigError("dx_m must divide ring_length_m into >= 2 cells");
    }
    double nt_real = horizon_s / dt;
    int nt_steps = static_cast<int>(std::llround(nt_real));
    if (nt_steps < 1 || std::abs(nt_steps * dt - horizon_s) > 1e-9 * horizon_s) {
        throw ConfigError("dt_s must divide horizon_s into >= 1 steps");
    }
    return RingGrid(ring_length, dt, dx, nt_steps + 1, nx);
}

int RingGrid::cell_of(double x) const {
    double u = x / dx_m;
    long long j = static_cast<long long>(std::llround(u));
    return wrap_index(j, n_x);
}

Field::Field(RingGrid grid, double fill)
    : grid_(grid),
      values_(static_cast<std::size_t>(grid.n_t) * grid.n_x, fill) {}

Field::Field(RingGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    std::size_t want = static_cast<std::size_t>(grid_.n_t) * grid_.n_x;
    if (values_.size() != want) {
        throw ShapeError("field value count " + std::to_string(values_.size()) +
                         " does not match grid n_t*n_x = " + std::to_string(want));
    }
}

void TrajectorySet::validate(double ring_length_m) const {
    // Records are grouped by vehicle in file order; track the last time seen
    // per vehicle so interleaved vehicle blocks are also accepted.
    std::vector<std::pair<int, double>> last; // (vehicle_id, last t), small N
    for (std::size_t i = 0; i < records.size(); ++i) {
        const TrajectoryRecord& r = records[i];
        if (!(r.x >= 0.0) || !(r.x < ring_length_m)) {
            throw ConfigError("trajectory record " + std::to_string(i) +
                              ": position " + std::to_string(r.x) +
                              " outside [0, " + std::to_string(ring_length_m) + ")");
        }
        if (!std::isfinite(r.t) || !std::isfinite(r.v)) {
            throw ConfigError("trajectory record " + std::to_string(i) +
                              ": non-finite time or speed");
        }
        auto it = std::find_if(last.begin(), last.end(),
                               [&](const auto& p) { return p.first == r.vehicle_id; });
        if (it == last.end()) {
            last.emplace_back(r.vehicle_id, r.t);
        } else {
            if (!(r.t > it->second)) {
                throw ConfigError("trajectory record " + std::to_string(i) +
                                  ": vehicle " + std::to_string(r.vehicle_id) +
                                  " timestamps must be strictly increasing");
            }
            it->second = r.t;
        }
    }
}

MeasurementSet subsample_measurements(const Field& field,
                                      const std::vector<int>& detector_positions) {
    const RingGrid& g = field.grid();
    std::unordered_set<int> seen;
    for (int p : detector_positions) {
        if (p < 0 || p >= g.n_x) {
            throw ConfigError("detector position " + std::to_string(p) +
                              " outside [0, " + std::to_string(g.n_x) + ")");
        }
        if (!seen.insert(p).second) {
            throw ConfigError("duplicate detector position " + std::to_string(p));
        }
    }
    MeasurementSet out;
    out.initial_profile.assign(field.row(0), field.row(0) + g.n_x);
    out.detector_positions = detector_positions;
    out.detector_series.resize(detector_positions.size());
    for (std::size_t d = 0; d < detector_positions.size(); ++d) {
        out.detector_series[d].resize(g.n_t);
        for (int t = 0; t < g.n_t; ++t) {
            out.detector_series[d][t] = field(t, detector_positions[d]);
        }
    }
    return out;
}

std::vector<int> evenly_spaced_detectors(int n_detectors, int n_x) {
    if (n_detectors < 1 || n_detectors > n_x) {
        throw ConfigError("detector count must lie in [1, n_x]");
    }
    std::vector<int> out(n_detectors);
    for (int i = 0; i < n_detectors; ++i) {
        out[i] = static_cast<int>(static_cast<long long>(i) * n_x / n_detectors);
    }
    return out;
}

} // namespace ringlwr
