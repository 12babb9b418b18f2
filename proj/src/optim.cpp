#include "ringlwr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "ringlwr/field_io.hpp"

namespace ringlwr {

Adam::Adam(AdamConfig cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {
    if (!(cfg_.lr > 0.0) || !(cfg_.eps > 0.0) || !(cfg_.beta1 >= 0.0) ||
        cfg_.beta1 >= 1.0 || !(cfg_.beta2 >= 0.0) || cfg_.beta2 >= 1.0) {
        throw ConfigError("ADAM hyperparameters out of range");
    }
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw ShapeError("ADAM state does not match the parameter vector");
    }
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad[i])) {
            throw OptimizerError("non-finite gradient at component " +
                                 std::to_string(i));
        }
    }
    t_ += 1;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < grad.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        double mhat = m_[i] / bc1;
        double vhat = v_[i] / bc2;
        params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

void Adam::save(std::ostream& os) const {
    os << "adam v1\n";
    os << "lr=" << format_double(cfg_.lr) << '\n';
    os << "beta1=" << format_double(cfg_.beta1) << '\n';
    os << "beta2=" << format_double(cfg_.beta2) << '\n';
    os << "eps=" << format_double(cfg_.eps) << '\n';
    os << "steps=" << t_ << '\n';
    os << "size=" << m_.size() << '\n';
    for (std::size_t i = 0; i < m_.size(); ++i) {
        os << format_double(m_[i]) << ',' << format_double(v_[i]) << '\n';
    }
}

namespace {

std::string ckpt_line(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line)) throw IoError(name + ": truncated checkpoint");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string ckpt_kv(std::istream& is, const std::string& key, const std::string& name) {
    std::string line = ckpt_line(is, name);
    std::string prefix = key + "=";
    if (line.rfind(prefix, 0) != 0) {
        throw IoError(name + ": expected '" + key + "=', got '" + line + "'");
    }
    return line.substr(prefix.size());
}

} // namespace

Adam Adam::load(std::istream& is, const std::string& name) {
    if (ckpt_line(is, name) != "adam v1") {
        throw IoError(name + ": unknown ADAM checkpoint version");
    }
    AdamConfig cfg;
    cfg.lr = parse_double(ckpt_kv(is, "lr", name), "lr");
    cfg.beta1 = parse_double(ckpt_kv(is, "beta1", name), "beta1");
    cfg.beta2 = parse_double(ckpt_kv(is, "beta2", name), "beta2");
    cfg.eps = parse_double(ckpt_kv(is, "eps", name), "eps");
    long long steps = parse_int(ckpt_kv(is, "steps", name), "steps");
    std::size_t n = static_cast<std::size_t>(parse_int(ckpt_kv(is, "size", name), "size"));
    Adam out(cfg, n);
    out.t_ = steps;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string line = ckpt_line(is, name); // keep the views' backing alive
        auto f = split_fields(line);
        if (f.size() != 2) throw IoError(name + ": bad moment row");
        out.m_[i] = parse_double(f[0], "m");
        out.v_[i] = parse_double(f[1], "v");
    }
    return out;
}

Lbfgs::Lbfgs(LbfgsConfig cfg, std::size_t n) : cfg_(cfg), n_(n), g_(n, 0.0) {
    if (cfg_.history < 1 || !(cfg_.c1 > 0.0) || !(cfg_.c2 > cfg_.c1) ||
        cfg_.c2 >= 1.0 || cfg_.max_line_evals < 3) {
        throw ConfigError("L-BFGS settings out of range");
    }
    dir_.assign(n, 0.0);
    x_trial_.assign(n, 0.0);
    g_trial_.assign(n, 0.0);
    best_g_.assign(n, 0.0);
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double max_norm(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

} // namespace

void Lbfgs::push_pair(std::vector<double> s, std::vector<double> y) {
    double sy = dot(s, y);
    double guard = 1e-10 * std::sqrt(dot(s, s)) * std::sqrt(dot(y, y));
    if (!(sy > guard)) return; // curvature too weak to store
    if (static_cast<int>(s_hist_.size()) == cfg_.history) {
        s_hist_.erase(s_hist_.begin());
        y_hist_.erase(y_hist_.begin());
        rho_hist_.erase(rho_hist_.begin());
    }
    rho_hist_.push_back(1.0 / sy);
    s_hist_.push_back(std::move(s));
    y_hist_.push_back(std::move(y));
}

bool Lbfgs::step(std::span<double> params, const LossGrad& fn) {
    if (params.size() != n_) throw ShapeError("L-BFGS state size mismatch");
    if (!primed_) {
        f_ = fn(params, g_);
        if (!std::isfinite(f_)) {
            throw OptimizerError("non-finite loss at the L-BFGS starting point");
        }
        primed_ = true;
    }
    if (max_norm(g_) < cfg_.grad_tol) {
        diagnostic_ = "gradient below tolerance";
        return true;
    }

    // Two-loop recursion for d = -H g.
    std::vector<double>& d = dir_;
    std::copy(g_.begin(), g_.end(), d.begin());
    int m = static_cast<int>(s_hist_.size());
    alpha_buf_.assign(m, 0.0);
    for (int i = m - 1; i >= 0; --i) {
        alpha_buf_[i] = rho_hist_[i] * dot(s_hist_[i], d);
        for (std::size_t j = 0; j < n_; ++j) d[j] -= alpha_buf_[i] * y_hist_[i][j];
    }
    if (m > 0) {
        double gamma = dot(s_hist_[m - 1], y_hist_[m - 1]) /
                       dot(y_hist_[m - 1], y_hist_[m - 1]);
        for (std::size_t j = 0; j < n_; ++j) d[j] *= gamma;
    }
    for (int i = 0; i < m; ++i) {
        double beta = rho_hist_[i] * dot(y_hist_[i], d);
        for (std::size_t j = 0; j < n_; ++j) d[j] += s_hist_[i][j] * (alpha_buf_[i] - beta);
    }
    for (std::size_t j = 0; j < n_; ++j) d[j] = -d[j];

    double dphi0 = dot(g_, d);
    if (!(dphi0 < 0.0)) {
        // Stale curvature produced an ascent direction; fall back to steepest
        // descent with a fresh history.
        s_hist_.clear();
        y_hist_.clear();
        rho_hist_.clear();
        for (std::size_t j = 0; j < n_; ++j) d[j] = -g_[j];
        dphi0 = dot(g_, d);
        if (!(dphi0 < 0.0)) {
            diagnostic_ = "zero gradient direction";
            return true;
        }
    }

    const double phi0 = f_;
    auto eval_at = [&](double alpha, double& f_out) {
        for (std::size_t j = 0; j < n_; ++j) x_trial_[j] = params[j] + alpha * d[j];
        f_out = fn(x_trial_, g_trial_);
    };
    auto sufficient = [&](double alpha, double f_val) {
        return std::isfinite(f_val) && f_val <= phi0 + cfg_.c1 * alpha * dphi0;
    };

    int evals = 0;
    double best_alpha = 0.0, best_f = phi0;
    bool have_best = false;
    auto remember_best = [&](double alpha, double f_val) {
        if (sufficient(alpha, f_val) && f_val < best_f) {
            best_alpha = alpha;
            best_f = f_val;
            best_g_ = g_trial_;
            have_best = true;
        }
    };
    auto accept = [&](double alpha, double f_val, const std::vector<double>& g_new) {
        std::vector<double> s(n_), y(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            double xj = params[j] + alpha * d[j];
            s[j] = xj - params[j];
            y[j] = g_new[j] - g_[j];
            params[j] = xj;
        }
        f_ = f_val;
        g_ = g_new;
        push_pair(std::move(s), std::move(y));
    };

    // Bracketing phase (strong Wolfe): grow alpha until the minimum is
    // bracketed or the curvature condition holds.
    double alpha_prev = 0.0, phi_prev = phi0;
    double alpha = m == 0 ? std::min(1.0, 1.0 / std::max(1.0, max_norm(g_))) : 1.0;
    double lo = -1.0, hi = -1.0, phi_lo = 0.0;
    bool bracketed = false;
    for (; evals < cfg_.max_line_evals && !bracketed; ) {
        double f_t;
        eval_at(alpha, f_t);
        ++evals;
        if (!std::isfinite(f_t) || f_t > phi0 + cfg_.c1 * alpha * dphi0 ||
            (alpha_prev > 0.0 && f_t >= phi_prev)) {
            lo = alpha_prev;
            phi_lo = phi_prev;
            hi = alpha;
            bracketed = true;
            break;
        }
        remember_best(alpha, f_t);
        double dphi = dot(g_trial_, d);
        if (std::abs(dphi) <= -cfg_.c2 * dphi0) {
            accept(alpha, f_t, g_trial_);
            return false;
        }
        if (dphi >= 0.0) {
            lo = alpha;
            phi_lo = f_t;
            hi = alpha_prev;
            bracketed = true;
            break;
        }
        alpha_prev = alpha;
        phi_prev = f_t;
        alpha *= 2.0;
        if (alpha > 1e12) break;
    }

    // Zoom phase: bisect the bracket until strong Wolfe holds.
    while (bracketed && evals < cfg_.max_line_evals) {
        double a = 0.5 * (lo + hi);
        double f_t;
        eval_at(a, f_t);
        ++evals;
        if (!std::isfinite(f_t) || f_t > phi0 + cfg_.c1 * a * dphi0 ||
            (lo > 0.0 && f_t >= phi_lo)) {
            hi = a;
            continue;
        }
        remember_best(a, f_t);
        double dphi = dot(g_trial_, d);
        if (std::abs(dphi) <= -cfg_.c2 * dphi0) {
            accept(a, f_t, g_trial_);
            return false;
        }
        if (dphi * (hi - lo) >= 0.0) hi = lo;
        lo = a;
        phi_lo = f_t;
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }

    // Line search exhausted. A sufficient-decrease point still moves us
    // downhill; otherwise report convergence.
    if (have_best) {
        accept(best_alpha, best_f, best_g_);
        diagnostic_ = "line search stopped at a sufficient-decrease point";
        return false;
    }
    diagnostic_ = "line search found no acceptable step";
    return true;
}

void Lbfgs::save(std::ostream& os) const {
    os << "lbfgs v1\n";
    os << "history=" << cfg_.history << '\n';
    os << "c1=" << format_double(cfg_.c1) << '\n';
    os << "c2=" << format_double(cfg_.c2) << '\n';
    os << "max_line_evals=" << cfg_.max_line_evals << '\n';
    os << "grad_tol=" << format_double(cfg_.grad_tol) << '\n';
    os << "size=" << n_ << '\n';
    os << "primed=" << (primed_ ? 1 : 0) << '\n';
    os << "loss=" << format_double(f_) << '\n';
    os << "pairs=" << s_hist_.size() << '\n';
    auto dump = [&](const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) os << ',';
            os << format_double(v[i]);
        }
        os << '\n';
    };
    dump(g_);
    for (std::size_t p = 0; p < s_hist_.size(); ++p) {
        dump(s_hist_[p]);
        dump(y_hist_[p]);
    }
}

Lbfgs Lbfgs::load(std::istream& is, const std::string& name) {
    if (ckpt_line(is, name) != "lbfgs v1") {
        throw IoError(name + ": unknown L-BFGS checkpoint version");
    }
    LbfgsConfig cfg;
    cfg.history = static_cast<int>(parse_int(ckpt_kv(is, "history", name), "history"));
    cfg.c1 = parse_double(ckpt_kv(is, "c1", name), "c1");
    cfg.c2 = parse_double(ckpt_kv(is, "c2", name), "c2");
    cfg.max_line_evals =
        static_cast<int>(parse_int(ckpt_kv(is, "max_line_evals", name), "max_line_evals"));
    cfg.grad_tol = parse_double(ckpt_kv(is, "grad_tol", name), "grad_tol");
    std::size_t n = static_cast<std::size_t>(parse_int(ckpt_kv(is, "size", name), "size"));
    Lbfgs out(cfg, n);
    out.primed_ = parse_int(ckpt_kv(is, "primed", name), "primed") != 0;
    out.f_ = parse_double(ckpt_kv(is, "loss", name), "loss");
    std::size_t pairs =
        static_cast<std::size_t>(parse_int(ckpt_kv(is, "pairs", name), "pairs"));
    auto read_vec = [&](std::size_t len) {
        const std::string line = ckpt_line(is, name); // keep the views' backing alive
        auto f = split_fields(line);
        if (f.size() != len) throw IoError(name + ": bad vector row");
        std::vector<double> v(len);
        for (std::size_t i = 0; i < len; ++i) v[i] = parse_double(f[i], "value");
        return v;
    };
    out.g_ = read_vec(n);
    for (std::size_t p = 0; p < pairs; ++p) {
        std::vector<double> s = read_vec(n);
        std::vector<double> y = read_vec(n);
        double sy = dot(s, y);
        if (!(sy > 0.0)) throw IoError(name + ": stored pair violates curvature");
        out.rho_hist_.push_back(1.0 / sy);
        out.s_hist_.push_back(std::move(s));
        out.y_hist_.push_back(std::move(y));
    }
    return out;
}

} // namespace ringlwr
