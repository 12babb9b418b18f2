#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "ringlwr/models.hpp"
#include "ringlwr/rng.hpp"

using namespace ringlwr;

TEST_CASE("density encoding is (scaled time, ring sine, ring cosine)") {
    std::mt19937_64 rng(9);
    DensityNetModel m = DensityNetModel::make(2, 8, 200.0, 800.0, 0.2, rng);
    double enc[3];
    m.encode(50.0, 200.0, enc);
    CHECK(enc[0] == 0.25);
    CHECK(enc[1] == doctest::Approx(1.0).epsilon(1e-15)); // sin(pi/2)
    CHECK(enc[2] == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));

    // Encoding is ring-periodic, so the surrogate is too.
    CHECK(m.value(50.0, 200.0) == doctest::Approx(m.value(50.0, 1000.0)).epsilon(1e-12));

    double ddt[3];
    m.encode_dt(ddt);
    CHECK(ddt[0] == 1.0 / 200.0);
    CHECK(ddt[1] == 0.0);
    CHECK(ddt[2] == 0.0);

    double ddx[3];
    m.encode_dx(0.0, ddx);
    CHECK(ddx[0] == 0.0);
    CHECK(ddx[1] == doctest::Approx(2.0 * std::numbers::pi / 800.0).epsilon(1e-15));
    CHECK(ddx[2] == doctest::Approx(0.0).scale(1.0).epsilon(1e-18));
}

TEST_CASE("density model output is non-negative everywhere") {
    std::mt19937_64 rng(123);
    DensityNetModel m = DensityNetModel::make(2, 8, 100.0, 400.0, 0.2, rng);
    std::mt19937_64 probe(7);
    for (int i = 0; i < 200; ++i) {
        double t = uniform_in(probe, 0.0, 100.0);
        double x = uniform_in(probe, 0.0, 400.0);
        CHECK(m.value(t, x) >= 0.0);
    }
}

TEST_CASE("density time and space derivatives match finite differences") {
    std::mt19937_64 rng(55);
    DensityNetModel m = DensityNetModel::make(2, 8, 120.0, 500.0, 0.2, rng);
    const double h = 1e-4;
    std::mt19937_64 probe(3);
    for (int i = 0; i < 20; ++i) {
        double t = uniform_in(probe, 1.0, 119.0);
        double x = uniform_in(probe, 0.0, 500.0);
        DensityEval e = m.eval(t, x);
        CHECK(e.value == doctest::Approx(m.value(t, x)).epsilon(1e-13));
        double fd_t = (m.value(t + h, x) - m.value(t - h, x)) / (2.0 * h);
        double fd_x = (m.value(t, x + h) - m.value(t, x - h)) / (2.0 * h);
        CHECK(std::abs(e.ddt - fd_t) <= 1e-6 * (1.0 + std::abs(fd_t)));
        CHECK(std::abs(e.ddx - fd_x) <= 1e-6 * (1.0 + std::abs(fd_x)));
    }
}

TEST_CASE("fundamental-diagram surrogate derivatives match finite differences") {
    std::mt19937_64 rng(81);
    FdNetModel m = FdNetModel::make(1, 8, 0.2, 30.0, rng);
    const double h = 1e-5;
    for (double rho : {0.0, 0.02, 0.08, 0.15, 0.2}) {
        CAPTURE(rho);
        double fd_v = (m.value(rho + h) - m.value(rho - h)) / (2.0 * h);
        CHECK(std::abs(m.deriv(rho) - fd_v) <= 1e-6 * (1.0 + std::abs(fd_v)));
        // Differencing the analytic first derivative keeps roundoff out of
        // the curvature comparison.
        double fd_c = (m.deriv(rho + h) - m.deriv(rho - h)) / (2.0 * h);
        CHECK(std::abs(m.curv(rho) - fd_c) <= 1e-6 * (1.0 + std::abs(fd_c)));
    }
}

TEST_CASE("model factories are deterministic in the seed") {
    std::mt19937_64 a(42), b(42), c(43);
    DensityNetModel ma = DensityNetModel::make(2, 8, 100.0, 400.0, 0.2, a);
    DensityNetModel mb = DensityNetModel::make(2, 8, 100.0, 400.0, 0.2, b);
    DensityNetModel mc = DensityNetModel::make(2, 8, 100.0, 400.0, 0.2, c);
    REQUIRE(ma.net().params().size() == mb.net().params().size());
    bool same = true, diff = false;
    for (std::size_t i = 0; i < ma.net().params().size(); ++i) {
        same = same && ma.net().params()[i] == mb.net().params()[i];
        diff = diff || ma.net().params()[i] != mc.net().params()[i];
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("model constructors reject wrong shapes and scales") {
    std::mt19937_64 rng(1);
    MlpSpec two_in;
    two_in.input_dim = 2;
    MlpNet bad(two_in);
    CHECK_THROWS_AS(DensityNetModel(bad, 100.0, 400.0, 0.2), ConfigError);
    CHECK_THROWS_AS(FdNetModel(bad, 0.2, 30.0), ConfigError);

    MlpSpec one_in;
    one_in.input_dim = 1;
    CHECK_THROWS_AS(FdNetModel(MlpNet(one_in), -0.2, 30.0), ConfigError);
    MlpSpec three_in;
    three_in.input_dim = 3;
    CHECK_THROWS_AS(DensityNetModel(MlpNet(three_in), 0.0, 400.0, 0.2), ConfigError);
}
