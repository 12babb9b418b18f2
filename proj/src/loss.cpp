#include "ringlwr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ringlwr/rng.hpp"

namespace ringlwr {

void LossWeights::validate(int n_detectors) const {
    if (!(alpha_initial > 0.0)) throw ConfigError("alpha_initial must be positive");
    if (static_cast<int>(alpha_detector.size()) != n_detectors) {
        throw ShapeError("alpha_detector needs one entry per detector");
    }
    for (double a : alpha_detector) {
        if (!(a > 0.0)) throw ConfigError("detector weights must be positive");
    }
    if (!(p_omega_1 > 0.0) || !(p_omega_2 > 0.0) || !(p_v_1 > 0.0) || !(p_v_2 > 0.0)) {
        throw ConfigError("penalty coefficients must be positive");
    }
}

CollocationSet sample_collocation(const RingGrid& grid, int n_points,
                                  std::uint64_t seed) {
    std::size_t total = static_cast<std::size_t>(grid.n_t) * grid.n_x;
    if (n_points < 1 || static_cast<std::size_t>(n_points) > total) {
        throw ConfigError("collocation count must lie in [1, n_t*n_x]");
    }
    std::vector<std::uint32_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0u);
    std::mt19937_64 rng(seed);
    CollocationSet out;
    out.rng_seed = seed;
    out.points.reserve(n_points);
    for (int i = 0; i < n_points; ++i) {
        std::size_t j = i + uniform_below(rng, total - i);
        std::swap(idx[i], idx[j]);
        int t = static_cast<int>(idx[i] / grid.n_x);
        int x = static_cast<int>(idx[i] % grid.n_x);
        out.points.emplace_back(t, x);
    }
    return out;
}

double kernel_penalty(std::span<const double> weights, double p_1, double p_2,
                      std::span<double> ghat) {
    if (!ghat.empty() && ghat.size() != weights.size()) {
        throw ShapeError("kernel penalty gradient buffer size mismatch");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) {
            loss += p_1 * weights[i] * weights[i];
            if (!ghat.empty()) ghat[i] += 2.0 * p_1 * weights[i];
        }
    }
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        double rise = weights[i + 1] - weights[i];
        if (rise > 0.0) {
            loss += p_2 * rise * rise;
            if (!ghat.empty()) {
                ghat[i + 1] += 2.0 * p_2 * rise;
                ghat[i] -= 2.0 * p_2 * rise;
            }
        }
    }
    return loss;
}

double fd_penalty(const std::function<double(double)>& value,
                  const std::function<double(double)>& deriv, double rho_m,
                  int n_rho, double p_1, double p_2) {
    if (n_rho < 1 || !(rho_m > 0.0)) {
        throw ConfigError("FD penalty grid needs n_rho >= 1 and rho_m > 0");
    }
    double drho = rho_m / n_rho;
    double loss = 0.0;
    for (int i = 0; i < n_rho; ++i) {
        double v = value(i * drho);
        if (v < 0.0) loss += p_1 * v * v;
        double dv = deriv(i * drho);
        if (dv > 0.0) loss += p_2 * dv * dv;
    }
    return loss;
}

void PinnProblem::validate() const {
    if (static_cast<int>(measurements.initial_profile.size()) != grid.n_x) {
        throw ShapeError("initial measurement profile does not match the grid");
    }
    int n_det = measurements.n_detectors();
    if (n_det < 1) throw ConfigError("need at least one detector");
    if (static_cast<int>(measurements.detector_series.size()) != n_det) {
        throw ShapeError("detector series count does not match positions");
    }
    for (const auto& s : measurements.detector_series) {
        if (static_cast<int>(s.size()) != grid.n_t) {
            throw ShapeError("detector series length does not match the grid");
        }
    }
    for (int p : measurements.detector_positions) {
        if (p < 0 || p >= grid.n_x) throw ConfigError("detector cell out of range");
    }
    weights.validate(n_det);
    if (collocation.points.empty()) throw ConfigError("collocation set is empty");
    for (auto [t, x] : collocation.points) {
        if (t < 0 || t >= grid.n_t || x < 0 || x >= grid.n_x) {
            throw ConfigError("collocation point outside the grid");
        }
    }
    if (!(rho_scale > 0.0) || !(v_scale > 0.0) || !(rho_m > 0.0)) {
        throw ConfigError("model scales must be positive");
    }
    if (n_rho_grid < 2) throw ConfigError("FD penalty grid needs >= 2 cells");
    int n_shifts;
    if (kernel_mode == KernelMode::Fixed) {
        fixed_kernel.validate();
        if (fixed_kernel.dx_m != grid.dx_m) {
            throw ConfigError("fixed kernel cell width does not match the grid");
        }
        n_shifts = fixed_kernel.size();
    } else {
        n_shifts = kernel_cell_count(eta_m, grid.dx_m);
    }
    if (n_shifts > grid.n_x) throw ConfigError("kernel support exceeds ring circumference");
    if (fd_mode == FdMode::Fixed) fixed_fd.validate();
}

namespace {

/// Closed-form FD with its derivatives for the residual path. Unlike the
/// public fd_eval family this extends the formulas smoothly below rho = 0:
/// a learned kernel can transiently weight the look-ahead density negative,
/// and the penalty terms need finite values to push it back.
void fixed_fd_vvv(const FdParams& p, double rho, double& v, double& vp,
                  double& vpp) {
    if (rho >= 0.0) {
        v = fd_eval(p, rho);
        vp = fd_deriv(p, rho);
        vpp = fd_curv(p, rho);
        return;
    }
    switch (p.variant) {
        case FdVariant::Greenshields:
            v = p.v_f * (1.0 - rho / p.rho_m);
            vp = -p.v_f / p.rho_m;
            vpp = 0.0;
            return;
        case FdVariant::Underwood: {
            double e = std::exp(-rho / p.rho_c);
            v = p.v_f * e;
            vp = -p.v_f / p.rho_c * e;
            vpp = p.v_f / (p.rho_c * p.rho_c) * e;
            return;
        }
        case FdVariant::Drake: {
            double u = rho / p.rho_c;
            double e = std::exp(-0.5 * u * u);
            v = p.v_f * e;
            vp = -p.v_f * u / p.rho_c * e;
            vpp = p.v_f * (u * u - 1.0) / (p.rho_c * p.rho_c) * e;
            return;
        }
    }
}

DensityNetModel make_density(const PinnProblem& p, std::uint64_t init_seed) {
    p.validate();
    std::mt19937_64 rng(sub_seed(init_seed, "density-net"));
    double horizon = p.grid.time_at(p.grid.n_t - 1);
    return DensityNetModel::make(p.density_hidden_layers, p.density_hidden_width,
                                 horizon, p.grid.ring_length_m, p.rho_scale, rng);
}

FdNetModel make_fd(const PinnProblem& p, std::uint64_t init_seed) {
    std::mt19937_64 rng(sub_seed(init_seed, "fd-net"));
    return FdNetModel::make(p.fd_hidden_layers, p.fd_hidden_width, p.rho_m,
                            p.v_scale, rng);
}

} // namespace

PinnLoss::PinnLoss(PinnProblem problem, std::uint64_t init_seed)
    : problem_(std::move(problem)),
      density_(make_density(problem_, init_seed)),
      fd_net_(make_fd(problem_, init_seed)),
      fd_ws_(fd_net_.net().spec()),
      data_ws_(density_.net().spec()) {
    const RingGrid& g = problem_.grid;
    n_shifts_ = problem_.kernel_mode == KernelMode::Fixed
                    ? problem_.fixed_kernel.size()
                    : kernel_cell_count(problem_.eta_m, g.dx_m);

    n_theta_ = density_.net().params().size();
    n_v_ = problem_.fd_mode == FdMode::Learned ? fd_net_.net().params().size() : 0;
    n_omega_ = problem_.kernel_mode == KernelMode::Learned
                   ? static_cast<std::size_t>(n_shifts_)
                   : 0;
    n_total_ = n_theta_ + n_v_ + n_omega_;

    theta_omega_.assign(n_shifts_, 1.0);
    initial_params_.reserve(n_total_);
    auto dp = density_.net().params();
    initial_params_.insert(initial_params_.end(), dp.begin(), dp.end());
    if (n_v_ > 0) {
        auto fp = fd_net_.net().params();
        initial_params_.insert(initial_params_.end(), fp.begin(), fp.end());
    }
    initial_params_.insert(initial_params_.end(), n_omega_, 1.0);

    // Encoded inputs for every evaluation site are fixed for the whole run;
    // build them once.
    const auto& pts = problem_.collocation.points;
    colloc_enc_.resize(pts.size() * n_shifts_ * 3);
    colloc_encdx_.resize(pts.size() * n_shifts_ * 3);
    for (std::size_t p = 0; p < pts.size(); ++p) {
        double t = g.time_at(pts[p].first);
        for (int k = 0; k < n_shifts_; ++k) {
            double x = g.x_at(wrap_index(pts[p].second + k, g.n_x));
            std::size_t off = (p * n_shifts_ + k) * 3;
            density_.encode(t, x, std::span<double>(&colloc_enc_[off], 3));
            density_.encode_dx(x, std::span<double>(&colloc_encdx_[off], 3));
        }
    }
    density_.encode_dt(std::span<double>(enc_dt_, 3));

    init_enc_.resize(static_cast<std::size_t>(g.n_x) * 3);
    for (int j = 0; j < g.n_x; ++j) {
        density_.encode(0.0, g.x_at(j), std::span<double>(&init_enc_[3 * j], 3));
    }
    int n_det = problem_.measurements.n_detectors();
    det_enc_.resize(static_cast<std::size_t>(n_det) * g.n_t * 3);
    for (int d = 0; d < n_det; ++d) {
        double x = g.x_at(problem_.measurements.detector_positions[d]);
        for (int i = 0; i < g.n_t; ++i) {
            std::size_t off = (static_cast<std::size_t>(d) * g.n_t + i) * 3;
            density_.encode(g.time_at(i), x, std::span<double>(&det_enc_[off], 3));
        }
    }

    shift_ws_.reserve(n_shifts_);
    for (int k = 0; k < n_shifts_; ++k) shift_ws_.emplace_back(density_.net().spec());
    u_.assign(n_shifts_, 0.0);
    d_.assign(n_shifts_, 0.0);
    ghat_.assign(n_shifts_, 0.0);
}

void PinnLoss::load_params(std::span<const double> params) {
    if (params.size() != n_total_) {
        throw ShapeError("parameter vector does not match the problem layout");
    }
    density_.net().set_params(params.subspan(0, n_theta_));
    if (n_v_ > 0) fd_net_.net().set_params(params.subspan(n_theta_, n_v_));
    if (n_omega_ > 0) {
        auto block = params.subspan(n_theta_ + n_v_, n_omega_);
        std::copy(block.begin(), block.end(), theta_omega_.begin());
    }
}

PinnLoss::Parts PinnLoss::eval(std::span<const double> params, std::span<double> grad) {
    if (grad.size() != n_total_) {
        throw ShapeError("gradient buffer does not match the parameter count");
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    return eval_impl(params, grad, true);
}

PinnLoss::Parts PinnLoss::eval_loss(std::span<const double> params) {
    return eval_impl(params, {}, false);
}

PinnLoss::Parts PinnLoss::eval_impl(std::span<const double> params,
                                    std::span<double> grad, bool want_grad) {
    load_params(params);
    const RingGrid& g = problem_.grid;
    const MlpNet& dnet = density_.net();
    const MlpNet& vnet = fd_net_.net();
    const double rho_scale = density_.rho_scale();
    const double rho_m = problem_.rho_m;
    const double v_scale = problem_.v_scale;
    const bool fd_learned = problem_.fd_mode == FdMode::Learned;
    const bool kern_learned = problem_.kernel_mode == KernelMode::Learned;

    DiscreteKernel kern =
        kern_learned ? kernel_normalize(theta_omega_, problem_.eta_m, g.dx_m)
                     : problem_.fixed_kernel;
    const std::vector<double>& w = kern.weights;

    std::span<double> g_theta = want_grad ? grad.subspan(0, n_theta_) : std::span<double>();
    std::span<double> g_v =
        want_grad && n_v_ > 0 ? grad.subspan(n_theta_, n_v_) : std::span<double>();

    Parts parts;

    // Data loss: initial profile plus detector time series, each term a
    // mean of squared errors.
    {
        const auto& meas = problem_.measurements;
        double sum = 0.0;
        double scale = problem_.weights.alpha_initial / g.n_x;
        for (int j = 0; j < g.n_x; ++j) {
            data_ws_.forward(dnet, std::span<const double>(&init_enc_[3 * j], 3));
            double e = rho_scale * data_ws_.value() - meas.initial_profile[j];
            sum += e * e;
            if (want_grad) {
                double vb = 2.0 * scale * e * rho_scale;
                data_ws_.backward(dnet, std::span<const double>(&vb, 1), {}, 0, g_theta);
            }
        }
        parts.data += scale * sum;
        for (int dset = 0; dset < meas.n_detectors(); ++dset) {
            double dsum = 0.0;
            double dscale = problem_.weights.alpha_detector[dset] / g.n_t;
            const auto& series = meas.detector_series[dset];
            for (int i = 0; i < g.n_t; ++i) {
                std::size_t off = (static_cast<std::size_t>(dset) * g.n_t + i) * 3;
                data_ws_.forward(dnet, std::span<const double>(&det_enc_[off], 3));
                double e = rho_scale * data_ws_.value() - series[i];
                dsum += e * e;
                if (want_grad) {
                    double vb = 2.0 * dscale * e * rho_scale;
                    data_ws_.backward(dnet, std::span<const double>(&vb, 1), {}, 0,
                                      g_theta);
                }
            }
            parts.data += dscale * dsum;
        }
    }

    // Physics dynamics loss: mean squared residual over collocation points.
    std::fill(ghat_.begin(), ghat_.end(), 0.0);
    {
        const auto& pts = problem_.collocation.points;
        const double n_p = static_cast<double>(pts.size());
        const std::span<const double> dt_dir(enc_dt_, 3);
        double sum_f2 = 0.0;
        for (std::size_t p = 0; p < pts.size(); ++p) {
            for (int k = 0; k < n_shifts_; ++k) {
                std::size_t off = (p * n_shifts_ + k) * 3;
                shift_ws_[k].forward(dnet, std::span<const double>(&colloc_enc_[off], 3));
                shift_ws_[k].tangent(dnet, std::span<const double>(&colloc_encdx_[off], 3), 0);
                u_[k] = rho_scale * shift_ws_[k].value();
                d_[k] = rho_scale * shift_ws_[k].tangent_value(0);
            }
            shift_ws_[0].tangent(dnet, dt_dir, 1);
            double tau = rho_scale * shift_ws_[0].tangent_value(1);

            double rho_eta = 0.0, slope_eta = 0.0;
            for (int k = 0; k < n_shifts_; ++k) {
                rho_eta += w[k] * u_[k];
                slope_eta += w[k] * d_[k];
            }

            double V = 0.0, Vp = 0.0, Vpp = 0.0;
            if (fd_learned) {
                double xi = rho_eta / rho_m;
                fd_ws_.forward(vnet, std::span<const double>(&xi, 1));
                double one = 1.0;
                fd_ws_.tangent(vnet, std::span<const double>(&one, 1), 0);
                fd_ws_.tangent_second(vnet);
                V = v_scale * fd_ws_.value();
                Vp = v_scale / rho_m * fd_ws_.tangent_value(0);
                Vpp = v_scale / (rho_m * rho_m) * fd_ws_.tangent_second_value();
            } else {
                fixed_fd_vvv(problem_.fixed_fd, rho_eta, V, Vp, Vpp);
            }

            double f = tau + d_[0] * V + u_[0] * Vp * slope_eta;
            sum_f2 += f * f;

            if (want_grad) {
                double c = 2.0 * f / n_p;
                if (fd_learned) {
                    double vb = c * d_[0] * v_scale;
                    double tb = c * u_[0] * slope_eta * v_scale / rho_m;
                    fd_ws_.backward(vnet, std::span<const double>(&vb, 1),
                                    std::span<const double>(&tb, 1), 0, g_v);
                }
                double df_deta = d_[0] * Vp + u_[0] * Vpp * slope_eta;
                double df_ds = u_[0] * Vp;
                for (int k = 0; k < n_shifts_; ++k) {
                    double cu = c * df_deta * w[k];
                    double cd = c * df_ds * w[k];
                    if (k == 0) {
                        cu += c * Vp * slope_eta;
                        cd += c * V;
                    }
                    cu *= rho_scale;
                    cd *= rho_scale;
                    shift_ws_[k].backward(dnet, std::span<const double>(&cu, 1),
                                          std::span<const double>(&cd, 1), 0, g_theta);
                }
                double ct = c * rho_scale;
                shift_ws_[0].backward(dnet, {}, std::span<const double>(&ct, 1), 1,
                                      g_theta);
                if (kern_learned) {
                    for (int k = 0; k < n_shifts_; ++k) {
                        ghat_[k] += c * (df_deta * u_[k] + df_ds * d_[k]);
                    }
                }
            }
        }
        parts.phy_dyn = sum_f2 / n_p;
    }

    // Physics static loss: kernel-shape penalties on the normalized weights
    // plus FD-shape penalties on the density grid.
    {
        parts.phy_static += kernel_penalty(
            w, problem_.weights.p_omega_1, problem_.weights.p_omega_2,
            want_grad && kern_learned ? std::span<double>(ghat_) : std::span<double>());

        double drho = rho_m / problem_.n_rho_grid;
        for (int i = 0; i < problem_.n_rho_grid; ++i) {
            double rho_i = i * drho;
            double V = 0.0, Vp = 0.0;
            if (fd_learned) {
                double xi = rho_i / rho_m;
                fd_ws_.forward(vnet, std::span<const double>(&xi, 1));
                double one = 1.0;
                fd_ws_.tangent(vnet, std::span<const double>(&one, 1), 0);
                V = v_scale * fd_ws_.value();
                Vp = v_scale / rho_m * fd_ws_.tangent_value(0);
            } else {
                V = fd_eval(problem_.fixed_fd, rho_i);
                Vp = fd_deriv(problem_.fixed_fd, rho_i);
            }
            double vb = 0.0, tb = 0.0;
            if (V < 0.0) {
                parts.phy_static += problem_.weights.p_v_1 * V * V;
                vb = 2.0 * problem_.weights.p_v_1 * V * v_scale;
            }
            if (Vp > 0.0) {
                parts.phy_static += problem_.weights.p_v_2 * Vp * Vp;
                tb = 2.0 * problem_.weights.p_v_2 * Vp * v_scale / rho_m;
            }
            if (want_grad && fd_learned && (vb != 0.0 || tb != 0.0)) {
                fd_ws_.backward(vnet, std::span<const double>(&vb, 1),
                                std::span<const double>(&tb, 1), 0, g_v);
            }
        }
    }

    // Route the normalized-weight gradient through w = theta / sum(theta).
    if (want_grad && kern_learned) {
        double s = 0.0;
        for (double t : theta_omega_) s += t;
        double dot = 0.0;
        for (int k = 0; k < n_shifts_; ++k) dot += ghat_[k] * w[k];
        std::span<double> g_omega = grad.subspan(n_theta_ + n_v_, n_omega_);
        for (int k = 0; k < n_shifts_; ++k) {
            g_omega[k] += (ghat_[k] - dot) / s;
        }
    }

    parts.total = parts.data + parts.phy_dyn + parts.phy_static;
    return parts;
}

DiscreteKernel PinnLoss::kernel_at(std::span<const double> params) const {
    if (problem_.kernel_mode == KernelMode::Fixed) return problem_.fixed_kernel;
    if (params.size() != n_total_) throw ShapeError("parameter vector size mismatch");
    auto block = params.subspan(n_theta_ + n_v_, n_omega_);
    return kernel_normalize(std::vector<double>(block.begin(), block.end()),
                            problem_.eta_m, problem_.grid.dx_m);
}

DensityNetModel PinnLoss::density_at(std::span<const double> params) const {
    if (params.size() != n_total_) throw ShapeError("parameter vector size mismatch");
    DensityNetModel model = density_;
    model.net().set_params(params.subspan(0, n_theta_));
    return model;
}

double PinnLoss::fd_value_at(std::span<const double> params, double rho) const {
    if (problem_.fd_mode == FdMode::Fixed) return fd_eval(problem_.fixed_fd, rho);
    if (params.size() != n_total_) throw ShapeError("parameter vector size mismatch");
    FdNetModel model = fd_net_;
    model.net().set_params(params.subspan(n_theta_, n_v_));
    return model.value(rho);
}

double PinnLoss::fd_deriv_at(std::span<const double> params, double rho) const {
    if (problem_.fd_mode == FdMode::Fixed) return fd_deriv(problem_.fixed_fd, rho);
    if (params.size() != n_total_) throw ShapeError("parameter vector size mismatch");
    FdNetModel model = fd_net_;
    model.net().set_params(params.subspan(n_theta_, n_v_));
    return model.deriv(rho);
}

} // namespace ringlwr
