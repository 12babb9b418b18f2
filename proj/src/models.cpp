#include "ringlwr/models.hpp"

#include <cmath>
#include <numbers>

namespace ringlwr {

namespace {

MlpSpec density_spec(int hidden_layers, int hidden_width) {
    MlpSpec s;
    s.input_dim = 3;
    s.hidden_layers = hidden_layers;
    s.hidden_width = hidden_width;
    s.output_dim = 1;
    s.hidden_activation = Activation::Tanh;
    s.output_activation = Activation::Softplus;
    return s;
}

MlpSpec fd_spec(int hidden_layers, int hidden_width) {
    MlpSpec s;
    s.input_dim = 1;
    s.hidden_layers = hidden_layers;
    s.hidden_width = hidden_width;
    s.output_dim = 1;
    s.hidden_activation = Activation::Tanh;
    s.output_activation = Activation::Identity;
    return s;
}

} // namespace

DensityNetModel::DensityNetModel(MlpNet net, double horizon_s,
                                 double ring_length_m, double rho_scale)
    : net_(std::move(net)),
      horizon_s_(horizon_s),
      ring_length_m_(ring_length_m),
      rho_scale_(rho_scale) {
    if (net_.spec().input_dim != 3 || net_.spec().output_dim != 1) {
        throw ConfigError("density network must map 3 inputs to 1 output");
    }
    if (!(horizon_s_ > 0.0) || !(ring_length_m_ > 0.0) || !(rho_scale_ > 0.0)) {
        throw ConfigError("density model scales must be positive");
    }
}

DensityNetModel DensityNetModel::make(int hidden_layers, int hidden_width,
                                      double horizon_s, double ring_length_m,
                                      double rho_scale, std::mt19937_64& rng) {
    return DensityNetModel(MlpNet::glorot(density_spec(hidden_layers, hidden_width), rng),
                           horizon_s, ring_length_m, rho_scale);
}

void DensityNetModel::encode(double t, double x, std::span<double> out3) const {
    double u = 2.0 * std::numbers::pi * x / ring_length_m_;
    out3[0] = t / horizon_s_;
    out3[1] = std::sin(u);
    out3[2] = std::cos(u);
}

void DensityNetModel::encode_dx(double x, std::span<double> out3) const {
    double w = 2.0 * std::numbers::pi / ring_length_m_;
    double u = w * x;
    out3[0] = 0.0;
    out3[1] = w * std::cos(u);
    out3[2] = -w * std::sin(u);
}

void DensityNetModel::encode_dt(std::span<double> out3) const {
    out3[0] = 1.0 / horizon_s_;
    out3[1] = 0.0;
    out3[2] = 0.0;
}

double DensityNetModel::value(double t, double x) const {
    double enc[3];
    encode(t, x, enc);
    return rho_scale_ * net_.forward(enc)[0];
}

DensityEval DensityNetModel::eval(double t, double x) const {
    double enc[3], dx[3], dt[3];
    encode(t, x, enc);
    encode_dx(x, dx);
    encode_dt(dt);
    MlpEval ev(net_.spec());
    ev.forward(net_, enc);
    DensityEval out;
    out.value = rho_scale_ * ev.value();
    ev.tangent(net_, dt, 0);
    out.ddt = rho_scale_ * ev.tangent_value(0);
    ev.tangent(net_, dx, 0);
    out.ddx = rho_scale_ * ev.tangent_value(0);
    return out;
}

FdNetModel::FdNetModel(MlpNet net, double rho_m, double v_scale)
    : net_(std::move(net)), rho_m_(rho_m), v_scale_(v_scale) {
    if (net_.spec().input_dim != 1 || net_.spec().output_dim != 1) {
        throw ConfigError("fundamental-diagram network must map 1 input to 1 output");
    }
    if (!(rho_m_ > 0.0) || !(v_scale_ > 0.0)) {
        throw ConfigError("fundamental-diagram scales must be positive");
    }
}

FdNetModel FdNetModel::make(int hidden_layers, int hidden_width, double rho_m,
                            double v_scale, std::mt19937_64& rng) {
    return FdNetModel(MlpNet::glorot(fd_spec(hidden_layers, hidden_width), rng),
                      rho_m, v_scale);
}

double FdNetModel::value(double rho) const {
    double xi = rho / rho_m_;
    return v_scale_ * net_.forward(std::span<const double>(&xi, 1))[0];
}

double FdNetModel::deriv(double rho) const {
    double xi = rho / rho_m_;
    MlpEval ev(net_.spec());
    ev.forward(net_, std::span<const double>(&xi, 1));
    double one = 1.0;
    ev.tangent(net_, std::span<const double>(&one, 1), 0);
    return v_scale_ / rho_m_ * ev.tangent_value(0);
}

double FdNetModel::curv(double rho) const {
    double xi = rho / rho_m_;
    MlpEval ev(net_.spec());
    ev.forward(net_, std::span<const double>(&xi, 1));
    double one = 1.0;
    ev.tangent(net_, std::span<const double>(&one, 1), 0);
    ev.tangent_second(net_);
    return v_scale_ / (rho_m_ * rho_m_) * ev.tangent_second_value();
}

} // namespace ringlwr
