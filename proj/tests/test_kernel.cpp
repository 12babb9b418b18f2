#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ringlwr/kernel.hpp"
#include "test_util.hpp"

using namespace ringlwr;
using ringlwr_test::TempDir;

TEST_CASE("cell count demands an integer number of kernel cells") {
    CHECK(kernel_cell_count(40.0, 1.0) == 40);
    CHECK(kernel_cell_count(40.0, 5.0) == 8);
    CHECK(kernel_cell_count(0.3, 0.1) == 3); // survives 0.3/0.1 != 3 in binary
    CHECK_THROWS_AS(kernel_cell_count(41.0, 2.0), ConfigError);
    CHECK_THROWS_AS(kernel_cell_count(0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(kernel_cell_count(40.0, -1.0), ConfigError);
}

TEST_CASE("constant kernel spreads mass uniformly") {
    DiscreteKernel k = kernel_constant(40.0, 1.0);
    REQUIRE(k.size() == 40);
    for (double w : k.weights) CHECK(w == 1.0 / 40.0);
    CHECK(k.offset_m(7) == 7.0);
    CHECK_NOTHROW(k.validate());
}

TEST_CASE("linear kernel integrates the triangular profile per cell") {
    DiscreteKernel k = kernel_linear(40.0, 1.0);
    REQUIRE(k.size() == 40);
    // Cell k holds ((40-k)^2 - (39-k)^2)/1600 = (79-2k)/1600.
    for (int i = 0; i < 40; ++i)
        CHECK(k.weights[i] == doctest::Approx((79.0 - 2.0 * i) / 1600.0).epsilon(1e-14));
    CHECK(k.weights[0] == doctest::Approx(0.049375).epsilon(1e-14));
    CHECK(k.weights[39] == doctest::Approx(0.000625).epsilon(1e-14));
    // Consecutive weights drop by exactly 2*dx^2/eta^2.
    for (int i = 0; i + 1 < 40; ++i)
        CHECK(k.weights[i + 1] - k.weights[i] == doctest::Approx(-0.00125).epsilon(1e-12));
    CHECK_NOTHROW(k.validate()); // telescoping sum is 1

    DiscreteKernel c = kernel_linear(40.0, 5.0);
    REQUIRE(c.size() == 8);
    CHECK(c.weights[0] == 0.234375); // 15/64, exact in binary
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("normalization rescales without touching sign or order") {
    DiscreteKernel k = kernel_normalize({2.0, 1.0, 1.0}, 3.0, 1.0);
    CHECK(k.weights == std::vector<double>{0.5, 0.25, 0.25});
    CHECK_NOTHROW(k.validate());

    DiscreteKernel s = kernel_normalize({-1.0, 3.0}, 2.0, 1.0);
    CHECK(s.weights == std::vector<double>{-0.5, 1.5});
    CHECK_THROWS_AS(s.validate(), DegenerateKernelError); // negative weight

    CHECK_THROWS_AS(kernel_normalize({1.0, -1.0}, 2.0, 1.0), DegenerateKernelError);
    CHECK_THROWS_AS(kernel_normalize({1.0, 1.0, 1.0}, 2.0, 1.0), ShapeError);
}

TEST_CASE("validate rejects off-simplex weight vectors") {
    DiscreteKernel k{2.0, 1.0, {0.5, 0.5 + 1e-6}};
    CHECK_THROWS_AS(k.validate(), DegenerateKernelError);
    DiscreteKernel empty{0.0, 1.0, {}};
    CHECK_THROWS_AS(empty.validate(), DegenerateKernelError);
}

TEST_CASE("mass fraction counts whole cells inside the cutoff") {
    DiscreteKernel lin = kernel_linear(40.0, 1.0);
    CHECK(kernel_mass_fraction(lin, 10.0) == doctest::Approx(0.4375).epsilon(1e-13));
    CHECK(kernel_mass_fraction(lin, 10.5) == doctest::Approx(0.4375).epsilon(1e-13));
    CHECK(kernel_mass_fraction(lin, 0.0) == 0.0);
    CHECK(kernel_mass_fraction(lin, 40.0) == doctest::Approx(1.0).epsilon(1e-13));

    DiscreteKernel con = kernel_constant(40.0, 1.0);
    CHECK(kernel_mass_fraction(con, 10.0) == doctest::Approx(0.25).epsilon(1e-13));

    CHECK_THROWS_AS(kernel_mass_fraction(lin, 41.0), ConfigError);
}

TEST_CASE("kernel files round-trip bit-exactly") {
    TempDir dir;
    DiscreteKernel k = kernel_linear(35.0, 5.0);
    const std::string path = dir.file("kernel.csv");
    write_kernel(path, k);
    DiscreteKernel back = read_kernel(path);
    CHECK(back.eta_m == k.eta_m);
    CHECK(back.dx_m == k.dx_m);
    CHECK(back.weights == k.weights);

    // Single-row files carry no spacing and are refused.
    DiscreteKernel one{1.0, 1.0, {1.0}};
    const std::string solo = dir.file("one.csv");
    write_kernel(solo, one);
    CHECK_THROWS_AS(read_kernel(solo), IoError);
    CHECK_THROWS_AS(read_kernel(dir.file("missing.csv")), IoError);
}
