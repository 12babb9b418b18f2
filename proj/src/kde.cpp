#include "ringlwr/kde.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "ringlwr/errors.hpp"

namespace ringlwr {

void KdeConfig::validate() const {
    if (!(bandwidth_x_m > 0.0) || !(bandwidth_t_s > 0.0)) {
        throw ConfigError("KDE bandwidths must be positive");
    }
}

namespace {

constexpr double kWeightFloor = 1e-12;
constexpr int kRingImages = 3;
constexpr double kSigmaCut = 6.0; // Gaussian support truncated at 6 sigma

double gauss(double d, double sigma) {
    double u = d / sigma;
    return std::exp(-0.5 * u * u) /
           (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

/// Signed ring distance folded into (-L/2, L/2].
double wrap_distance(double d, double ring_length) {
    d = std::fmod(d, ring_length);
    if (d > 0.5 * ring_length) d -= ring_length;
    if (d <= -0.5 * ring_length) d += ring_length;
    return d;
}

/// Spatial kernel with periodic images, truncated where negligible.
double gauss_ring(double d_min, double ring_length, double sigma) {
    double acc = 0.0;
    for (int m = -kRingImages; m <= kRingImages; ++m) {
        double d = d_min + m * ring_length;
        if (std::abs(d) <= kSigmaCut * sigma) acc += gauss(d, sigma);
    }
    return acc;
}

/// Mean sampling interval per vehicle; single-record vehicles fall back to
/// the grid step. Used to weight records so reconstructed mass tracks the
/// vehicle count independent of sampling rate.
std::vector<double> record_durations(const TrajectorySet& traj, double dt_s) {
    struct PerVehicle {
        int id;
        double t_first, t_last;
        int count;
    };
    std::vector<PerVehicle> stats;
    for (const TrajectoryRecord& r : traj.records) {
        auto it = std::find_if(stats.begin(), stats.end(),
                               [&](const PerVehicle& s) { return s.id == r.vehicle_id; });
        if (it == stats.end()) {
            stats.push_back({r.vehicle_id, r.t, r.t, 1});
        } else {
            it->t_first = std::min(it->t_first, r.t);
            it->t_last = std::max(it->t_last, r.t);
            it->count += 1;
        }
    }
    std::vector<double> out(traj.records.size());
    for (std::size_t i = 0; i < traj.records.size(); ++i) {
        const TrajectoryRecord& r = traj.records[i];
        auto it = std::find_if(stats.begin(), stats.end(),
                               [&](const PerVehicle& s) { return s.id == r.vehicle_id; });
        out[i] = it->count > 1 ? (it->t_last - it->t_first) / (it->count - 1) : dt_s;
    }
    return out;
}

/// Accumulates per-record Gaussian weights into `weight` and, when `speed`
/// is non-null, the speed-weighted sum into `speed`. Record-major order
/// keeps the accumulation deterministic.
void accumulate(const TrajectorySet& traj, const KdeConfig& cfg, Field& weight,
                Field* speed) {
    const RingGrid& g = cfg.grid;
    const double L = g.ring_length_m;
    const double sx = cfg.bandwidth_x_m;
    const double st = cfg.bandwidth_t_s;
    std::vector<double> dur = record_durations(traj, g.dt_s);

    // Per-record window size in grid steps (time windows are per record).
    int half_x = static_cast<int>(std::ceil(kSigmaCut * sx / g.dx_m));
    bool whole_ring = 2 * half_x + 1 >= g.n_x;

    std::vector<double> wt, wx;
    std::vector<int> cols;
    for (std::size_t r = 0; r < traj.records.size(); ++r) {
        const TrajectoryRecord& rec = traj.records[r];
        int i_lo = std::max(0, static_cast<int>(std::ceil((rec.t - kSigmaCut * st) / g.dt_s)));
        int i_hi = std::min(g.n_t - 1,
                            static_cast<int>(std::floor((rec.t + kSigmaCut * st) / g.dt_s)));
        if (i_lo > i_hi) continue;

        wt.clear();
        for (int i = i_lo; i <= i_hi; ++i) {
            wt.push_back(dur[r] * gauss(g.time_at(i) - rec.t, st));
        }

        wx.clear();
        cols.clear();
        if (whole_ring) {
            for (int j = 0; j < g.n_x; ++j) {
                cols.push_back(j);
                wx.push_back(gauss_ring(wrap_distance(g.x_at(j) - rec.x, L), L, sx));
            }
        } else {
            int j_center = static_cast<int>(std::floor(rec.x / g.dx_m));
            for (int o = -half_x; o <= half_x; ++o) {
                int j = wrap_index(j_center + o, g.n_x);
                double d = wrap_distance(g.x_at(j) - rec.x, L);
                if (std::abs(d) > kSigmaCut * sx) continue;
                cols.push_back(j);
                wx.push_back(gauss_ring(d, L, sx));
            }
        }

        for (int i = i_lo; i <= i_hi; ++i) {
            double wti = wt[i - i_lo];
            double* wrow = weight.row(i);
            double* srow = speed ? speed->row(i) : nullptr;
            for (std::size_t c = 0; c < cols.size(); ++c) {
                double w = wti * wx[c];
                wrow[cols[c]] += w;
                if (srow) srow[cols[c]] += w * rec.v;
            }
        }
    }
}

void require_records(const TrajectorySet& traj) {
    if (traj.empty()) throw ConfigError("trajectory set is empty");
}

} // namespace

Field reconstruct_density(const TrajectorySet& traj, const KdeConfig& cfg) {
    cfg.validate();
    require_records(traj);
    traj.validate(cfg.grid.ring_length_m);
    Field density(cfg.grid);
    accumulate(traj, cfg, density, nullptr);
    return density;
}

Field reconstruct_speed(const TrajectorySet& traj, const KdeConfig& cfg,
                        std::vector<std::uint8_t>* fallback_mask) {
    cfg.validate();
    require_records(traj);
    traj.validate(cfg.grid.ring_length_m);
    const RingGrid& g = cfg.grid;
    Field weight(g), weighted(g);
    accumulate(traj, cfg, weight, &weighted);

    Field speed(g);
    std::vector<std::uint8_t> mask(weight.values().size(), 0);
    // Resolve thin cells from their nearest resolvable neighbor with a
    // multi-source breadth-first pass over the (t, x) grid; x wraps, t does
    // not. Queue order is deterministic, so ties are too.
    std::deque<std::size_t> queue;
    const int n_t = g.n_t, n_x = g.n_x;
    for (std::size_t c = 0; c < mask.size(); ++c) {
        if (weight.values()[c] >= kWeightFloor) {
            speed.values()[c] = weighted.values()[c] / weight.values()[c];
            queue.push_back(c);
        } else {
            mask[c] = 1;
        }
    }
    if (queue.empty()) {
        throw NumericError("speed reconstruction: no cell has resolvable weight");
    }
    std::vector<std::uint8_t> visited(mask.size(), 0);
    for (std::size_t c : queue) visited[c] = 1;
    while (!queue.empty()) {
        std::size_t c = queue.front();
        queue.pop_front();
        int t = static_cast<int>(c) / n_x;
        int x = static_cast<int>(c) % n_x;
        const int nt_off[2] = {-1, 1};
        for (int d : nt_off) {
            int t2 = t + d;
            if (t2 < 0 || t2 >= n_t) continue;
            std::size_t c2 = static_cast<std::size_t>(t2) * n_x + x;
            if (!visited[c2]) {
                visited[c2] = 1;
                speed.values()[c2] = speed.values()[c];
                queue.push_back(c2);
            }
        }
        for (int d : nt_off) {
            std::size_t c2 = static_cast<std::size_t>(t) * n_x + wrap_index(x + d, n_x);
            if (!visited[c2]) {
                visited[c2] = 1;
                speed.values()[c2] = speed.values()[c];
                queue.push_back(c2);
            }
        }
    }
    if (fallback_mask) *fallback_mask = std::move(mask);
    return speed;
}

namespace {

/// Periodic linear interpolation of a field row at position x.
double interp_row(const Field& f, int t, double x) {
    const RingGrid& g = f.grid();
    double u = x / g.dx_m;
    double fl = std::floor(u);
    int j0 = wrap_index(static_cast<long long>(fl), g.n_x);
    int j1 = wrap_index(static_cast<long long>(fl) + 1, g.n_x);
    double frac = u - fl;
    return (1.0 - frac) * f(t, j0) + frac * f(t, j1);
}

} // namespace

TrajectorySet synth_trajectories(const Field& speed_field, int n_vehicles) {
    const RingGrid& g = speed_field.grid();
    if (n_vehicles < 1) throw ConfigError("vehicle count must be >= 1");
    double headway = g.ring_length_m / n_vehicles;

    TrajectorySet out;
    out.records.reserve(static_cast<std::size_t>(n_vehicles) * g.n_t);
    for (int p = 0; p < n_vehicles; ++p) {
        double x = p * headway;
        for (int i = 0; i < g.n_t; ++i) {
            double v = interp_row(speed_field, i, x);
            out.records.push_back({p, g.time_at(i), x, v});
            if (i + 1 < g.n_t) {
                x = std::fmod(x + v * g.dt_s, g.ring_length_m);
                if (x < 0.0) x += g.ring_length_m;
            }
        }
    }
    return out;
}

} // namespace ringlwr
