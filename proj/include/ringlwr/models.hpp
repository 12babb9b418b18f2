#ifndef RINGLWR_MODELS_HPP
#define RINGLWR_MODELS_HPP

#include <random>
#include <span>

#include "ringlwr/grid.hpp"
#include "ringlwr/mlp.hpp"

namespace ringlwr {

struct DensityEval {
    double value; // veh/m
    double ddt;   // veh/m/s
    double ddx;   // veh/m^2
};

/// Learned density field rho(t, x) = rho_scale * softplus-net(encode(t, x)).
/// The encoding (t/T, sin(2*pi*x/L), cos(2*pi*x/L)) bakes the ring's
/// periodicity into the surrogate; x-derivatives chain through it.
class DensityNetModel {
public:
    DensityNetModel(MlpNet net, double horizon_s, double ring_length_m,
                    double rho_scale);
    static DensityNetModel make(int hidden_layers, int hidden_width,
                                double horizon_s, double ring_length_m,
                                double rho_scale, std::mt19937_64& rng);

    const MlpNet& net() const { return net_; }
    MlpNet& net() { return net_; }
    double horizon_s() const { return horizon_s_; }
    double ring_length_m() const { return ring_length_m_; }
    double rho_scale() const { return rho_scale_; }

    void encode(double t, double x, std::span<double> out3) const;
    /// d(encoding)/dx at x; the t component is 0.
    void encode_dx(double x, std::span<double> out3) const;
    /// d(encoding)/dt, position-independent.
    void encode_dt(std::span<double> out3) const;

    double value(double t, double x) const;
    DensityEval eval(double t, double x) const;

private:
    MlpNet net_;
    double horizon_s_, ring_length_m_, rho_scale_;
};

/// Learned fundamental diagram V(rho) = v_scale * net(rho / rho_m), identity
/// output; non-negativity and monotonicity are enforced by loss penalties,
/// not by the architecture.
class FdNetModel {
public:
    FdNetModel(MlpNet net, double rho_m, double v_scale);
    static FdNetModel make(int hidden_layers, int hidden_width, double rho_m,
                           double v_scale, std::mt19937_64& rng);

    const MlpNet& net() const { return net_; }
    MlpNet& net() { return net_; }
    double rho_m() const { return rho_m_; }
    double v_scale() const { return v_scale_; }

    double value(double rho) const;
    double deriv(double rho) const;
    double curv(double rho) const;

private:
    MlpNet net_;
    double rho_m_, v_scale_;
};

} // namespace ringlwr

#endif
