#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "ringlwr/kde.hpp"

using namespace ringlwr;

namespace {

KdeConfig config_for(RingGrid g, double bx = 5.0, double bt = 2.0) {
    KdeConfig cfg;
    cfg.bandwidth_x_m = bx;
    cfg.bandwidth_t_s = bt;
    cfg.grid = g;
    return cfg;
}

double row_mass(const Field& f, int t) {
    double m = 0.0;
    for (int j = 0; j < f.n_x(); ++j) m += f(t, j);
    return m * f.grid().dx_m;
}

/// One vehicle circling at constant speed, sampled every `dt_sample`.
TrajectorySet circling(double v, double L, double t_end, double dt_sample,
                       int id = 1, double x0 = 0.0) {
    TrajectorySet traj;
    for (double t = 0.0; t <= t_end + 1e-9; t += dt_sample) {
        double x = std::fmod(x0 + v * t, L);
        traj.records.push_back({id, t, x, v});
    }
    return traj;
}

} // namespace

TEST_CASE("a single record deposits unit mass for unit duration") {
    RingGrid g(100.0, 1.0, 1.0, 25, 100);
    TrajectorySet traj;
    traj.records = {{1, 12.0, 50.0, 8.0}};
    Field rho = reconstruct_density(traj, config_for(g));
    // The record's weight is the grid dt (single-record fallback); the
    // space-time Gaussian sums to 1 up to the 6-sigma truncation tail.
    double total = 0.0;
    for (int t = 0; t < g.n_t; ++t) total += row_mass(rho, t) * g.dt_s;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-7));
    // Peak sits at the record's cell.
    for (int j = 0; j < g.n_x; ++j) CHECK(rho(12, 50) >= rho(12, j));
}

TEST_CASE("density mass tracks the vehicle count at interior times") {
    RingGrid g(100.0, 1.0, 2.0, 41, 50);
    TrajectorySet traj;
    const int n_veh = 5;
    for (int k = 0; k < n_veh; ++k) {
        TrajectorySet one = circling(5.0, 100.0, 40.0, 1.0, k + 1, k * 20.0);
        traj.records.insert(traj.records.end(), one.records.begin(), one.records.end());
    }
    Field rho = reconstruct_density(traj, config_for(g));
    for (int t = 12; t <= 28; ++t) { // > 6 sigma_t away from both ends
        CHECK(row_mass(rho, t) == doctest::Approx(5.0).epsilon(0.02));
    }
}

TEST_CASE("record weighting keeps mass stable across sampling rates") {
    RingGrid g(100.0, 1.0, 2.0, 41, 50);
    Field slow = reconstruct_density(circling(5.0, 100.0, 40.0, 1.0), config_for(g));
    Field fast = reconstruct_density(circling(5.0, 100.0, 40.0, 0.25), config_for(g));
    for (int t : {15, 20, 25}) {
        CHECK(row_mass(fast, t) == doctest::Approx(row_mass(slow, t)).epsilon(1e-3));
    }
}

TEST_CASE("uniform-speed trajectories reconstruct a uniform speed field") {
    RingGrid g(100.0, 1.0, 1.0, 21, 100);
    TrajectorySet traj;
    for (int k = 0; k < 4; ++k) {
        TrajectorySet one = circling(12.3, 100.0, 20.0, 1.0, k + 1, k * 25.0);
        traj.records.insert(traj.records.end(), one.records.begin(), one.records.end());
    }
    std::vector<std::uint8_t> mask;
    Field v = reconstruct_speed(traj, config_for(g), &mask);
    for (double s : v.values()) CHECK(std::abs(s - 12.3) < 1e-9);
}

TEST_CASE("unresolvable cells inherit the nearest resolvable speed") {
    // Records only near t = 0; late rows are far outside every time window.
    RingGrid g(100.0, 1.0, 1.0, 61, 100);
    TrajectorySet traj;
    traj.records = {{1, 0.0, 10.0, 4.0}, {1, 1.0, 14.0, 4.0}};
    std::vector<std::uint8_t> mask;
    Field v = reconstruct_speed(traj, config_for(g), &mask);
    REQUIRE(mask.size() == v.values().size());
    std::size_t fallbacks = 0;
    for (std::uint8_t m : mask) fallbacks += m;
    CHECK(fallbacks > 0);
    // Fallback fills propagate the only observed speed everywhere.
    for (double s : v.values()) CHECK(s == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("reconstruction rejects empty or invalid inputs") {
    RingGrid g(100.0, 1.0, 1.0, 21, 100);
    TrajectorySet empty;
    CHECK_THROWS_AS(reconstruct_density(empty, config_for(g)), ConfigError);
    KdeConfig bad = config_for(g, -1.0);
    TrajectorySet one;
    one.records = {{1, 0.0, 1.0, 1.0}};
    CHECK_THROWS_AS(reconstruct_density(one, bad), ConfigError);
    TrajectorySet off;
    off.records = {{1, 0.0, 100.0, 1.0}};
    CHECK_THROWS_AS(reconstruct_density(off, config_for(g)), ConfigError);
}

TEST_CASE("virtual probes ride a constant speed field at fixed headway") {
    RingGrid g(100.0, 1.0, 2.0, 11, 50);
    Field speed(g, 6.0);
    TrajectorySet traj = synth_trajectories(speed, 4);
    REQUIRE(traj.records.size() == 4u * 11u);
    CHECK_NOTHROW(traj.validate(100.0));
    // Records are per-vehicle blocks; vehicle k starts at k*L/4 and advances
    // 6 m per second.
    for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < 11; ++i) {
            const TrajectoryRecord& r = traj.records[k * 11 + i];
            CHECK(r.vehicle_id == k);
            CHECK(r.t == g.time_at(i));
            CHECK(r.v == doctest::Approx(6.0).epsilon(1e-12));
            double expect = std::fmod(25.0 * k + 6.0 * i, 100.0);
            CHECK(r.x == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(synth_trajectories(speed, 0), ConfigError);
}
