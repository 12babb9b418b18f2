#ifndef RINGLWR_LOSS_HPP
#define RINGLWR_LOSS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ringlwr/grid.hpp"
#include "ringlwr/kernel.hpp"
#include "ringlwr/models.hpp"
#include "ringlwr/solver.hpp"

namespace ringlwr {

/// Coefficients of the three-part objective.
struct LossWeights {
    double alpha_initial = 1.0;
    std::vector<double> alpha_detector; // one per detector
    double p_omega_1 = 1e4, p_omega_2 = 1e4;
    double p_v_1 = 1e4, p_v_2 = 1e4;

    void validate(int n_detectors) const;
};

/// Fixed set of residual evaluation points, drawn once per training run.
struct CollocationSet {
    std::vector<std::pair<int, int>> points; // (time index, cell index)
    std::uint64_t rng_seed = 0;
};

/// Uniform sample without replacement from the n_t * n_x grid.
CollocationSet sample_collocation(const RingGrid& grid, int n_points,
                                  std::uint64_t seed);

/// Kernel-constraint penalty p1 * sum(min{w_i,0}^2) + p2 * sum(max{w_{i+1}-w_i,0}^2)
/// on normalized weights. When ghat is non-empty (same length), the
/// gradient with respect to the weights is accumulated into it.
double kernel_penalty(std::span<const double> weights, double p_1, double p_2,
                      std::span<double> ghat = {});

/// FD-constraint penalty p1 * sum(min{V(i drho),0}^2) + p2 * sum(max{V'(i drho),0}^2)
/// over i = 0..n_rho-1 with drho = rho_m/n_rho. Reference implementation
/// over callables; the training path fuses the same sums with gradients.
double fd_penalty(const std::function<double(double)>& value,
                  const std::function<double(double)>& deriv, double rho_m,
                  int n_rho, double p_1, double p_2);

/// Nonlocal conservation-law residual at one point, over point-evaluable
/// surrogates. `density(t, x)` returns a DensityEval; `fd` exposes
/// value(rho) and deriv(rho). Spatial shifts wrap on the ring.
///
///   f = d_t rho + d_x rho * V(rho_eta) + rho * V'(rho_eta) * d_x rho_eta
///
/// with rho_eta and d_x rho_eta the kernel-weighted look-ahead sums.
template <class Density, class Fd>
double residual_at(const Density& density, const Fd& fd,
                   std::span<const double> weights, double dx_m,
                   double ring_length_m, double t, double x) {
    double rho_eta = 0.0, slope_eta = 0.0;
    double u0 = 0.0, d0 = 0.0, ddt0 = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        double xk = std::fmod(x + static_cast<double>(k) * dx_m, ring_length_m);
        DensityEval p = density(t, xk);
        if (k == 0) {
            u0 = p.value;
            d0 = p.ddx;
            ddt0 = p.ddt;
        }
        rho_eta += weights[k] * p.value;
        slope_eta += weights[k] * p.ddx;
    }
    return ddt0 + d0 * fd.value(rho_eta) + u0 * fd.deriv(rho_eta) * slope_eta;
}

enum class FdMode { Learned, Fixed };
enum class KernelMode { Learned, Fixed };

/// Everything the objective needs besides the trainable parameters.
struct PinnProblem {
    RingGrid grid;
    MeasurementSet measurements;
    CollocationSet collocation;
    LossWeights weights;

    int density_hidden_layers = 3;
    int density_hidden_width = 32;
    double rho_scale = 0.2; // density output scale (veh/m)

    FdMode fd_mode = FdMode::Learned;
    int fd_hidden_layers = 2;
    int fd_hidden_width = 16;
    double rho_m = 0.2;  // FD input scale and penalty-grid extent
    double v_scale = 30.0;
    FdParams fixed_fd;   // used when fd_mode == Fixed

    KernelMode kernel_mode = KernelMode::Learned;
    double eta_m = 40.0;
    DiscreteKernel fixed_kernel; // used when kernel_mode == Fixed

    int n_rho_grid = 100; // penalty grid cells: rho = i*rho_m/n_rho_grid

    void validate() const;
};

/// The three-part objective with exact gradients over the concatenated
/// parameter vector [theta_density | theta_v? | theta_omega?] (learned
/// blocks only). Holds all evaluation workspaces; eval() is deterministic
/// with fixed summation order.
class PinnLoss {
public:
    struct Parts {
        double total = 0.0, data = 0.0, phy_dyn = 0.0, phy_static = 0.0;
    };

    /// Network weights come from sub-seeds of `init_seed`; the raw kernel
    /// vector starts at all-ones (the uniform kernel).
    PinnLoss(PinnProblem problem, std::uint64_t init_seed);

    std::size_t param_count() const { return n_total_; }
    std::size_t density_block() const { return 0; }
    std::size_t fd_block() const { return n_theta_; }
    std::size_t kernel_block() const { return n_theta_ + n_v_; }
    std::size_t density_size() const { return n_theta_; }
    std::size_t fd_size() const { return n_v_; }
    std::size_t kernel_size() const { return n_omega_; }

    const std::vector<double>& initial_params() const { return initial_params_; }

    /// Loss and gradient at `params`; `grad` (same length) is overwritten.
    Parts eval(std::span<const double> params, std::span<double> grad);
    /// Loss only (no gradient buffers touched).
    Parts eval_loss(std::span<const double> params);

    const PinnProblem& problem() const { return problem_; }

    /// Views of the trained state at `params`.
    DiscreteKernel kernel_at(std::span<const double> params) const;
    DensityNetModel density_at(std::span<const double> params) const;
    double fd_value_at(std::span<const double> params, double rho) const;
    double fd_deriv_at(std::span<const double> params, double rho) const;

private:
    Parts eval_impl(std::span<const double> params, std::span<double> grad,
                    bool want_grad);
    void load_params(std::span<const double> params);

    PinnProblem problem_;
    DensityNetModel density_;
    FdNetModel fd_net_;
    std::vector<double> theta_omega_;
    std::size_t n_theta_ = 0, n_v_ = 0, n_omega_ = 0, n_total_ = 0;
    std::vector<double> initial_params_;

    // Precomputed evaluation tables and reusable workspaces.
    int n_shifts_ = 0;
    std::vector<double> colloc_enc_;    // [point][shift][3]
    std::vector<double> colloc_encdx_;  // [point][shift][3]
    double enc_dt_[3] = {0.0, 0.0, 0.0};
    std::vector<double> init_enc_;      // [cell][3]
    std::vector<double> det_enc_;       // [detector][time][3]
    std::vector<MlpEval> shift_ws_;
    MlpEval fd_ws_, data_ws_;
    std::vector<double> u_, d_, ghat_;
};

} // namespace ringlwr

#endif
