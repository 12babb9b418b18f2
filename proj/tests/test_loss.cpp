#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "doctest.h"
#include "ringlwr/fd.hpp"
#include "ringlwr/loss.hpp"

using namespace ringlwr;

namespace {

/// Analytic traveling wave rho = a + b*sin(2*pi*(x - c*t)/L) with exact
/// derivatives; ddt is computed as -c * ddx so the advection identity holds
/// to the last bit.
struct WaveDensity {
    double a, b, c, L;
    DensityEval operator()(double t, double x) const {
        double u = 2.0 * std::numbers::pi * (x - c * t) / L;
        double slope = b * (2.0 * std::numbers::pi / L) * std::cos(u);
        return {a + b * std::sin(u), -c * slope, slope};
    }
};

struct AffineFd {
    double v0, v1; // V(rho) = v0 + v1 * rho
    double value(double rho) const { return v0 + v1 * rho; }
    double deriv(double) const { return v1; }
};

struct ConstFd {
    double c;
    double value(double) const { return c; }
    double deriv(double) const { return 0.0; }
};

PinnProblem tiny_problem() {
    PinnProblem p;
    p.grid = RingGrid::from_extent(100.0, 1.0, 5.0, 10.0); // 20 cells, 11 rows
    p.measurements.initial_profile.resize(20);
    for (int j = 0; j < 20; ++j) {
        p.measurements.initial_profile[j] =
            0.05 + 0.02 * std::sin(2.0 * std::numbers::pi * j / 20.0);
    }
    p.measurements.detector_positions = {0, 7, 13};
    p.measurements.detector_series.assign(3, std::vector<double>(11));
    for (int d = 0; d < 3; ++d) {
        for (int i = 0; i < 11; ++i) {
            p.measurements.detector_series[d][i] = 0.04 + 0.01 * std::cos(0.3 * i + d);
        }
    }
    p.weights.alpha_detector = {1.0, 2.0, 0.5};
    p.collocation = sample_collocation(p.grid, 12, 99);
    p.density_hidden_layers = 2;
    p.density_hidden_width = 8;
    p.fd_hidden_layers = 1;
    p.fd_hidden_width = 8;
    p.eta_m = 20.0; // four look-ahead cells at dx = 5
    p.n_rho_grid = 50;
    return p;
}

/// Interior point for gradient checks: the FD block realizes a strictly
/// positive, strictly decreasing surrogate and the kernel block is strictly
/// decreasing and positive, so no penalty hinge sits at its kink.
std::vector<double> interior_params(const PinnLoss& loss) {
    std::vector<double> p = loss.initial_params();
    std::size_t off = loss.fd_block();
    REQUIRE(loss.fd_size() == 25u);
    for (int k = 0; k < 8; ++k) p[off + k] = 0.3;        // hidden weights
    for (int k = 8; k < 16; ++k) p[off + k] = 0.0;       // hidden biases
    for (int k = 16; k < 24; ++k) p[off + k] = -0.1;     // output weights
    p[off + 24] = 1.0;                                   // output bias
    std::size_t koff = loss.kernel_block();
    REQUIRE(loss.kernel_size() == 4u);
    double theta[4] = {1.5, 1.3, 1.1, 0.9};
    for (int k = 0; k < 4; ++k) p[koff + k] = theta[k];
    return p;
}

} // namespace

TEST_CASE("kernel penalty charges negativity and upward steps") {
    std::vector<double> up = {0.4, 0.6};
    CHECK(kernel_penalty(up, 1e4, 1e4) == doctest::Approx(400.0).epsilon(1e-12));

    std::vector<double> mixed = {-0.5, 1.5};
    CHECK(kernel_penalty(mixed, 100.0, 1e4) == doctest::Approx(40025.0).epsilon(1e-12));

    std::vector<double> feasible = {0.5, 0.3, 0.2, 0.0};
    CHECK(kernel_penalty(feasible, 1e4, 1e4) == 0.0);

    std::vector<double> weights = {0.2, -0.3, 0.45, 0.4, -0.1};
    std::vector<double> ghat(5, 0.0);
    double f0 = kernel_penalty(weights, 300.0, 700.0, ghat);
    CHECK(f0 > 0.0);
    const double h = 1e-7;
    for (int i = 0; i < 5; ++i) {
        std::vector<double> wp = weights, wm = weights;
        wp[i] += h;
        wm[i] -= h;
        double fd = (kernel_penalty(wp, 300.0, 700.0) - kernel_penalty(wm, 300.0, 700.0)) /
                    (2.0 * h);
        CHECK(std::abs(ghat[i] - fd) <= 1e-6 * (1.0 + std::abs(fd)));
    }

    std::vector<double> small(3, 0.0);
    CHECK_THROWS_AS(kernel_penalty(weights, 1.0, 1.0, small), ShapeError);
}

TEST_CASE("fundamental-diagram penalty vanishes for admissible curves") {
    FdParams green;
    green.variant = FdVariant::Greenshields;
    green.v_f = 30.0;
    green.rho_m = 0.2;
    double p = fd_penalty([&](double r) { return fd_eval(green, r); },
                          [&](double r) { return fd_deriv(green, r); }, 0.2, 100, 1e4,
                          1e4);
    CHECK(p == 0.0);

    // V(rho) = rho is non-negative but increasing: only the slope term fires.
    double inc = fd_penalty([](double r) { return r; }, [](double) { return 1.0; }, 0.2,
                            100, 1e4, 1e4);
    CHECK(inc == doctest::Approx(1e6).epsilon(1e-12));

    // Constant negative value: only the negativity term fires.
    double neg = fd_penalty([](double) { return -1.0; }, [](double) { return 0.0; }, 0.2,
                            100, 1e4, 1e4);
    CHECK(neg == doctest::Approx(1e6).epsilon(1e-12));

    CHECK_THROWS_AS(fd_penalty([](double) { return 0.0; }, [](double) { return 0.0; },
                               0.2, 0, 1.0, 1.0),
                    ConfigError);
}

TEST_CASE("pointwise residual matches a frozen nonlocal evaluation") {
    // rho = 0.05 + 0.02*sin(2*pi*(x - 3t)/100), V = 8 - 40*rho_eta,
    // weights (0.7, 0.3), dx = 2, evaluated at t = 1.5, x = 99 so the
    // look-ahead wraps through the ring seam.
    WaveDensity density{0.05, 0.02, 3.0, 100.0};
    AffineFd fd{8.0, -40.0};
    std::vector<double> w = {0.7, 0.3};
    double f = residual_at(density, fd, w, 2.0, 100.0, 1.5, 99.0);
    CHECK(f == doctest::Approx(0.0017660966237237854).epsilon(1e-10));
}

TEST_CASE("a traveling wave with matching constant speed has zero residual") {
    WaveDensity density{0.06, 0.02, 7.5, 123.0};
    ConstFd fd{7.5};
    std::vector<double> w = {1.0};
    for (double t : {0.0, 2.5, 7.75}) {
        for (int j = 0; j < 40; ++j) {
            double x = j * 123.0 / 40.0;
            CHECK(std::abs(residual_at(density, fd, w, 123.0 / 40.0, 123.0, t, x)) <=
                  1e-15);
        }
    }
}

TEST_CASE("collocation sampling is a deterministic in-range subset") {
    RingGrid g = RingGrid::from_extent(100.0, 1.0, 5.0, 10.0);
    CollocationSet a = sample_collocation(g, 40, 7);
    CollocationSet b = sample_collocation(g, 40, 7);
    CollocationSet c = sample_collocation(g, 40, 8);
    CHECK(a.points == b.points);
    CHECK(a.points != c.points);
    CHECK(a.rng_seed == 7u);

    std::set<std::pair<int, int>> distinct(a.points.begin(), a.points.end());
    CHECK(distinct.size() == 40u);
    for (auto [t, x] : a.points) {
        CHECK(t >= 0);
        CHECK(t < g.n_t);
        CHECK(x >= 0);
        CHECK(x < g.n_x);
    }

    CollocationSet all = sample_collocation(g, 11 * 20, 1);
    std::set<std::pair<int, int>> cover(all.points.begin(), all.points.end());
    CHECK(cover.size() == 220u);
    CHECK_THROWS_AS(sample_collocation(g, 0, 1), ConfigError);
    CHECK_THROWS_AS(sample_collocation(g, 221, 1), ConfigError);
}

TEST_CASE("loss weight and problem validation catch inconsistent setups") {
    PinnProblem p = tiny_problem();
    CHECK_NOTHROW(p.validate());

    PinnProblem bad = p;
    bad.measurements.initial_profile.resize(19);
    CHECK_THROWS_AS(bad.validate(), ShapeError);

    bad = p;
    bad.weights.alpha_detector = {1.0};
    CHECK_THROWS_AS(bad.validate(), ShapeError);

    bad = p;
    bad.weights.alpha_detector[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = p;
    bad.collocation.points.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = p;
    bad.collocation.points.push_back({11, 0});
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = p;
    bad.eta_m = 150.0; // 30 cells on a 20-cell ring
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = p;
    bad.kernel_mode = KernelMode::Fixed;
    bad.fixed_kernel = kernel_constant(20.0, 2.0); // wrong cell width
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("objective gradient matches finite differences in every block") {
    PinnLoss loss(tiny_problem(), 77);
    REQUIRE(loss.param_count() == 142u);
    REQUIRE(loss.density_size() == 113u);
    std::vector<double> p = interior_params(loss);

    std::vector<double> grad(p.size(), 0.0);
    PinnLoss::Parts parts = loss.eval(p, grad);
    CHECK(parts.phy_static == 0.0); // interior point: no hinge is active
    CHECK(parts.total == parts.data + parts.phy_dyn + parts.phy_static);

    const double h = 1e-6;
    for (std::size_t i = 0; i < p.size(); ++i) {
        CAPTURE(i);
        std::vector<double> pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        double fd = (loss.eval_loss(pp).total - loss.eval_loss(pm).total) / (2.0 * h);
        CHECK(std::abs(grad[i] - fd) <= 1e-5 * (1.0 + std::abs(fd)));
    }
}

TEST_CASE("loss-only evaluation agrees exactly with the gradient path") {
    PinnLoss loss(tiny_problem(), 77);
    std::vector<double> p = interior_params(loss);
    std::vector<double> g1(p.size()), g2(p.size());
    PinnLoss::Parts with_grad = loss.eval(p, g1);
    PinnLoss::Parts lone = loss.eval_loss(p);
    CHECK(with_grad.total == lone.total);
    CHECK(with_grad.data == lone.data);
    CHECK(with_grad.phy_dyn == lone.phy_dyn);
    CHECK(with_grad.phy_static == lone.phy_static);

    // Workspaces are reused across calls; revisiting the same point after an
    // evaluation elsewhere must reproduce the result bit for bit.
    std::vector<double> q = loss.initial_params();
    loss.eval_loss(q);
    PinnLoss::Parts again = loss.eval(p, g2);
    CHECK(again.total == with_grad.total);
    CHECK(g1 == g2);
}

TEST_CASE("the raw kernel parameterization is scale invariant") {
    PinnLoss loss(tiny_problem(), 77);
    std::vector<double> p = interior_params(loss);
    std::vector<double> scaled = p;
    for (std::size_t k = loss.kernel_block(); k < loss.param_count(); ++k) {
        scaled[k] *= 3.0;
    }
    PinnLoss::Parts a = loss.eval_loss(p);
    PinnLoss::Parts b = loss.eval_loss(scaled);
    CHECK(b.total == doctest::Approx(a.total).epsilon(1e-12));

    // Consequently the gradient is orthogonal to the raw kernel vector.
    std::vector<double> grad(p.size(), 0.0);
    loss.eval(p, grad);
    double dot = 0.0, gnorm = 0.0;
    for (std::size_t k = loss.kernel_block(); k < loss.param_count(); ++k) {
        dot += grad[k] * p[k];
        gnorm += grad[k] * grad[k];
    }
    CHECK(std::abs(dot) <= 1e-10 * (1.0 + std::sqrt(gnorm)));
}

TEST_CASE("data weights scale their loss part linearly") {
    PinnProblem base = tiny_problem();
    PinnLoss l1(base, 5);
    PinnProblem doubled = base;
    doubled.weights.alpha_initial *= 2.0;
    for (double& a : doubled.weights.alpha_detector) a *= 2.0;
    PinnLoss l2(doubled, 5);

    std::vector<double> p = l1.initial_params();
    PinnLoss::Parts one = l1.eval_loss(p);
    PinnLoss::Parts two = l2.eval_loss(p);
    CHECK(two.data == 2.0 * one.data);
    CHECK(two.phy_dyn == one.phy_dyn);
    CHECK(two.phy_static == one.phy_static);
}

TEST_CASE("initial parameters start at the uniform kernel and fixed seeds") {
    PinnLoss a(tiny_problem(), 31);
    PinnLoss b(tiny_problem(), 31);
    PinnLoss c(tiny_problem(), 32);
    CHECK(a.initial_params() == b.initial_params());
    CHECK(a.initial_params() != c.initial_params());

    DiscreteKernel k = a.kernel_at(a.initial_params());
    REQUIRE(k.size() == 4);
    for (double w : k.weights) CHECK(w == 0.25);
    CHECK(k.eta_m == 20.0);
    CHECK(k.dx_m == 5.0);
}

TEST_CASE("trained-state views reflect the parameter blocks") {
    PinnLoss loss(tiny_problem(), 77);
    std::vector<double> p = interior_params(loss);

    DiscreteKernel k = loss.kernel_at(p);
    double sum = 1.5 + 1.3 + 1.1 + 0.9;
    CHECK(k.weights[0] == doctest::Approx(1.5 / sum).epsilon(1e-15));
    CHECK(k.weights[3] == doctest::Approx(0.9 / sum).epsilon(1e-15));

    // The handcrafted FD block is 30*(1 - 0.8*tanh(xi * 0.3)) at xi = rho/rho_m.
    double want = 30.0 * (1.0 - 0.8 * std::tanh(0.5 * 0.3));
    CHECK(loss.fd_value_at(p, 0.1) == doctest::Approx(want).epsilon(1e-13));
    CHECK(loss.fd_deriv_at(p, 0.1) < 0.0);

    DensityNetModel dm = loss.density_at(p);
    CHECK(dm.value(2.0, 10.0) >= 0.0);
    CHECK(dm.rho_scale() == 0.2);

    std::vector<double> wrong(5, 0.0);
    CHECK_THROWS_AS(loss.eval_loss(wrong), ShapeError);
    std::vector<double> g(3, 0.0);
    CHECK_THROWS_AS(loss.eval(p, g), ShapeError);
}

TEST_CASE("fixed-mode problems drop the corresponding parameter blocks") {
    PinnProblem p = tiny_problem();
    p.fd_mode = FdMode::Fixed;
    p.fixed_fd.variant = FdVariant::Greenshields;
    p.fixed_fd.v_f = 30.0;
    p.fixed_fd.rho_m = 0.2;
    p.kernel_mode = KernelMode::Fixed;
    p.fixed_kernel = kernel_linear(20.0, 5.0);

    PinnLoss loss(p, 77);
    CHECK(loss.fd_size() == 0u);
    CHECK(loss.kernel_size() == 0u);
    CHECK(loss.param_count() == loss.density_size());

    std::vector<double> params = loss.initial_params();
    CHECK(loss.fd_value_at(params, 0.1) == fd_eval(p.fixed_fd, 0.1));
    CHECK(loss.fd_deriv_at(params, 0.1) == fd_deriv(p.fixed_fd, 0.1));
    DiscreteKernel k = loss.kernel_at(params);
    CHECK(k.weights == p.fixed_kernel.weights);

    // Gradients flow only into the density block and stay finite.
    std::vector<double> grad(params.size(), 0.0);
    PinnLoss::Parts parts = loss.eval(params, grad);
    CHECK(std::isfinite(parts.total));
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    CHECK(norm > 0.0);
}
