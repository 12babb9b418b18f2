#ifndef RINGLWR_OPTIM_HPP
#define RINGLWR_OPTIM_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ringlwr/errors.hpp"

namespace ringlwr {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected ADAM over a flat parameter vector. Bit-deterministic:
/// identical (state, params, grad) yields identical updates.
class Adam {
public:
    Adam(AdamConfig cfg, std::size_t n);

    /// One update in place. Rejects non-finite gradients, naming the first
    /// offending component.
    void step(std::span<double> params, std::span<const double> grad);

    long long steps_done() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    void save(std::ostream& os) const;
    static Adam load(std::istream& is, const std::string& name);

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    long long t_ = 0;
};

struct LbfgsConfig {
    int history = 20;
    double c1 = 1e-4; // sufficient decrease
    double c2 = 0.9;  // curvature
    int max_line_evals = 60;
    double grad_tol = 1e-12; // max-norm convergence threshold
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracket + bisection
/// zoom). Curvature pairs with s.y <= 0 are skipped; accepted steps never
/// increase the loss. Bit-deterministic for a deterministic callback.
class Lbfgs {
public:
    /// Returns the loss and fills the gradient buffer.
    using LossGrad =
        std::function<double(std::span<const double>, std::span<double>)>;

    Lbfgs(LbfgsConfig cfg, std::size_t n);

    /// One outer iteration: direction, line search, parameter update.
    /// Returns true once converged: gradient below tolerance, or no
    /// acceptable step exists (the diagnostic explains which).
    bool step(std::span<double> params, const LossGrad& fn);

    /// Valid after the first step call.
    double loss() const { return f_; }
    const std::vector<double>& grad() const { return g_; }
    const std::string& diagnostic() const { return diagnostic_; }

    void save(std::ostream& os) const;
    static Lbfgs load(std::istream& is, const std::string& name);

private:
    void push_pair(std::vector<double> s, std::vector<double> y);

    LbfgsConfig cfg_;
    std::size_t n_;
    bool primed_ = false;
    double f_ = 0.0;
    std::vector<double> g_;
    std::vector<std::vector<double>> s_hist_, y_hist_;
    std::vector<double> rho_hist_;
    std::string diagnostic_;
    // scratch
    std::vector<double> dir_, x_trial_, g_trial_, best_g_, alpha_buf_;
};

} // namespace ringlwr

#endif
