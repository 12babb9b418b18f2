#include "ringlwr/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "ringlwr/field_io.hpp"
#include "ringlwr/rng.hpp"

namespace ringlwr {

Activation activation_from_name(std::string_view name) {
    if (name == "identity") return Activation::Identity;
    if (name == "tanh") return Activation::Tanh;
    if (name == "softplus") return Activation::Softplus;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Softplus: return "softplus";
    }
    return "?";
}

namespace {

double sigmoid(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    double e = std::exp(a);
    return e / (1.0 + e);
}

double act_value(Activation k, double a) {
    switch (k) {
        case Activation::Identity: return a;
        case Activation::Tanh: return std::tanh(a);
        case Activation::Softplus:
            return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
    }
    return a;
}

/// First derivative from pre-activation a and stored value z.
double act_prime(Activation k, double a, double z) {
    switch (k) {
        case Activation::Identity: return 1.0;
        case Activation::Tanh: return 1.0 - z * z;
        case Activation::Softplus: return sigmoid(a);
    }
    return 1.0;
}

/// Second derivative from (a, z, act_prime).
double act_second(Activation k, double /*a*/, double z, double prime) {
    switch (k) {
        case Activation::Identity: return 0.0;
        case Activation::Tanh: return -2.0 * z * prime;
        case Activation::Softplus: return prime * (1.0 - prime);
    }
    return 0.0;
}

} // namespace

void MlpSpec::validate() const {
    if (input_dim < 1 || output_dim < 1) throw ConfigError("network dims must be >= 1");
    if (hidden_layers < 0) throw ConfigError("hidden layer count must be >= 0");
    if (hidden_layers > 0 && hidden_width < 1) {
        throw ConfigError("hidden width must be >= 1");
    }
}

std::size_t MlpSpec::param_count() const {
    std::size_t n = 0;
    for (int l = 0; l < n_layers(); ++l) {
        n += static_cast<std::size_t>(layer_in(l)) * layer_out(l) + layer_out(l);
    }
    return n;
}

MlpNet::MlpNet(MlpSpec spec) : spec_(spec) {
    spec_.validate();
    std::size_t off = 0;
    for (int l = 0; l < spec_.n_layers(); ++l) {
        w_off_.push_back(off);
        off += static_cast<std::size_t>(spec_.layer_in(l)) * spec_.layer_out(l);
        b_off_.push_back(off);
        off += spec_.layer_out(l);
    }
    params_.assign(off, 0.0);
}

MlpNet MlpNet::glorot(MlpSpec spec, std::mt19937_64& rng) {
    MlpNet net(spec);
    for (int l = 0; l < spec.n_layers(); ++l) {
        int in = spec.layer_in(l), out = spec.layer_out(l);
        double limit = std::sqrt(6.0 / (in + out));
        double* w = net.params_.data() + net.w_off_[l];
        for (int k = 0; k < in * out; ++k) w[k] = uniform_in(rng, -limit, limit);
    }
    return net;
}

void MlpNet::set_params(std::span<const double> p) {
    if (p.size() != params_.size()) {
        throw ShapeError("parameter vector size mismatch");
    }
    std::copy(p.begin(), p.end(), params_.begin());
}

std::vector<double> MlpNet::forward(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != spec_.input_dim) {
        throw ShapeError("input size does not match network input_dim");
    }
    std::vector<double> cur(input.begin(), input.end()), next;
    for (int l = 0; l < spec_.n_layers(); ++l) {
        int in = spec_.layer_in(l), out = spec_.layer_out(l);
        next.assign(out, 0.0);
        const double* w = weights(l);
        const double* b = biases(l);
        Activation act = spec_.layer_activation(l);
        for (int k = 0; k < out; ++k) {
            double acc = b[k];
            const double* wrow = w + static_cast<std::size_t>(k) * in;
            for (int i = 0; i < in; ++i) acc += wrow[i] * cur[i];
            next[k] = act_value(act, acc);
        }
        cur.swap(next);
    }
    return cur;
}

void MlpNet::grad_params(std::span<const double> input,
                         std::span<const double> output_cotangent,
                         std::span<double> grad) const {
    MlpEval ev(spec_);
    ev.forward(*this, input);
    ev.backward(*this, output_cotangent, {}, 0, grad);
}

std::vector<double> MlpNet::grad_input(std::span<const double> input) const {
    MlpEval ev(spec_);
    ev.forward(*this, input);
    std::vector<double> jac(static_cast<std::size_t>(spec_.output_dim) * spec_.input_dim);
    std::vector<double> dir(spec_.input_dim, 0.0);
    for (int i = 0; i < spec_.input_dim; ++i) {
        dir[i] = 1.0;
        ev.tangent(*this, dir, 0);
        dir[i] = 0.0;
        for (int k = 0; k < spec_.output_dim; ++k) {
            jac[static_cast<std::size_t>(k) * spec_.input_dim + i] = ev.tangent_value(0, k);
        }
    }
    return jac;
}

void MlpNet::grad_params_of_input_grad(std::span<const double> input,
                                       std::span<const double> cot_on_input_grad,
                                       std::span<double> grad) const {
    if (cot_on_input_grad.size() !=
        static_cast<std::size_t>(spec_.output_dim) * spec_.input_dim) {
        throw ShapeError("input-grad cotangent has wrong size");
    }
    MlpEval ev(spec_);
    ev.forward(*this, input);
    std::vector<double> dir(spec_.input_dim, 0.0);
    std::vector<double> tb(spec_.output_dim);
    for (int i = 0; i < spec_.input_dim; ++i) {
        dir[i] = 1.0;
        ev.tangent(*this, dir, 0);
        dir[i] = 0.0;
        for (int k = 0; k < spec_.output_dim; ++k) {
            tb[k] = cot_on_input_grad[static_cast<std::size_t>(k) * spec_.input_dim + i];
        }
        ev.backward(*this, {}, tb, 0, grad);
    }
}

MlpEval::MlpEval(const MlpSpec& spec) : spec_(spec) {
    spec_.validate();
    int layers = spec_.n_layers();
    auto shape_like_z = [&](std::vector<std::vector<double>>& v) {
        v.resize(layers + 1);
        v[0].assign(spec_.input_dim, 0.0);
        for (int l = 0; l < layers; ++l) v[l + 1].assign(spec_.layer_out(l), 0.0);
    };
    auto shape_like_a = [&](std::vector<std::vector<double>>& v) {
        v.resize(layers);
        for (int l = 0; l < layers; ++l) v[l].assign(spec_.layer_out(l), 0.0);
    };
    shape_like_z(z_);
    shape_like_a(a_);
    for (int s = 0; s < 2; ++s) {
        shape_like_z(zdot_[s]);
        shape_like_a(adot_[s]);
    }
    shape_like_z(zddot_);
    shape_like_a(addot_);
    int maxw = spec_.input_dim;
    for (int l = 0; l < layers; ++l) maxw = std::max(maxw, spec_.layer_out(l));
    zbar_.assign(maxw, 0.0);
    abar_.assign(maxw, 0.0);
    zdotbar_.assign(maxw, 0.0);
    adotbar_.assign(maxw, 0.0);
}

void MlpEval::forward(const MlpNet& net, std::span<const double> input) {
    if (net.spec() != spec_) throw ShapeError("evaluation state built for a different spec");
    if (static_cast<int>(input.size()) != spec_.input_dim) {
        throw ShapeError("input size does not match network input_dim");
    }
    std::copy(input.begin(), input.end(), z_[0].begin());
    for (int l = 0; l < spec_.n_layers(); ++l) {
        int in = spec_.layer_in(l), out = spec_.layer_out(l);
        const double* w = net.weights(l);
        const double* b = net.biases(l);
        const double* zin = z_[l].data();
        double* a = a_[l].data();
        double* zout = z_[l + 1].data();
        Activation act = spec_.layer_activation(l);
        for (int k = 0; k < out; ++k) {
            double acc = b[k];
            const double* wrow = w + static_cast<std::size_t>(k) * in;
            for (int i = 0; i < in; ++i) acc += wrow[i] * zin[i];
            a[k] = acc;
            zout[k] = act_value(act, acc);
        }
    }
}

void MlpEval::tangent(const MlpNet& net, std::span<const double> dir, int stream) {
    if (static_cast<int>(dir.size()) != spec_.input_dim) {
        throw ShapeError("tangent direction size does not match input_dim");
    }
    auto& zd = zdot_[stream];
    auto& ad = adot_[stream];
    std::copy(dir.begin(), dir.end(), zd[0].begin());
    for (int l = 0; l < spec_.n_layers(); ++l) {
        int in = spec_.layer_in(l), out = spec_.layer_out(l);
        const double* w = net.weights(l);
        const double* zdin = zd[l].data();
        double* adl = ad[l].data();
        double* zdout = zd[l + 1].data();
        const double* a = a_[l].data();
        const double* zout = z_[l + 1].data();
        Activation act = spec_.layer_activation(l);
        for (int k = 0; k < out; ++k) {
            double acc = 0.0;
            const double* wrow = w + static_cast<std::size_t>(k) * in;
            for (int i = 0; i < in; ++i) acc += wrow[i] * zdin[i];
            adl[k] = acc;
            zdout[k] = act_prime(act, a[k], zout[k]) * acc;
        }
    }
}

void MlpEval::tangent_second(const MlpNet& net) {
    auto& ad = adot_[0];
    std::fill(zddot_[0].begin(), zddot_[0].end(), 0.0);
    for (int l = 0; l < spec_.n_layers(); ++l) {
        int in = spec_.layer_in(l), out = spec_.layer_out(l);
        const double* w = net.weights(l);
        const double* zddin = zddot_[l].data();
        double* addl = addot_[l].data();
        double* zddout = zddot_[l + 1].data();
        const double* a = a_[l].data();
        const double* zout = z_[l + 1].data();
        const double* adl = ad[l].data();
        Activation act = spec_.layer_activation(l);
        for (int k = 0; k < out; ++k) {
            double acc = 0.0;
            const double* wrow = w + static_cast<std::size_t>(k) * in;
            for (int i = 0; i < in; ++i) acc += wrow[i] * zddin[i];
            addl[k] = acc;
            double p = act_prime(act, a[k], zout[k]);
            double s = act_second(act, a[k], zout[k], p);
            zddout[k] = s * adl[k] * adl[k] + p * acc;
        }
    }
}

void MlpEval::backward(const MlpNet& net, std::span<const double> value_bar,
                       std::span<const double> tangent_bar, int stream,
                       std::span<double> grad, std::span<double> input_bar) {
    if (grad.size() != spec_.param_count()) {
        throw ShapeError("gradient buffer size does not match parameter count");
    }
    bool has_val = !value_bar.empty();
    bool has_tan = !tangent_bar.empty();
    if (has_val && static_cast<int>(value_bar.size()) != spec_.output_dim) {
        throw ShapeError("value cotangent size does not match output_dim");
    }
    if (has_tan && static_cast<int>(tangent_bar.size()) != spec_.output_dim) {
        throw ShapeError("tangent cotangent size does not match output_dim");
    }
    const auto& zd = zdot_[stream];
    const auto& ad = adot_[stream];

    for (int k = 0; k < spec_.output_dim; ++k) {
        zbar_[k] = has_val ? value_bar[k] : 0.0;
        zdotbar_[k] = has_tan ? tangent_bar[k] : 0.0;
    }
    for (int l = spec_.n_layers() - 1; l >= 0; --l) {
        int in = spec_.layer_in(l), out = spec_.layer_out(l);
        const double* w = net.weights(l);
        const double* a = a_[l].data();
        const double* zout = z_[l + 1].data();
        const double* zin = z_[l].data();
        const double* adl = ad[l].data();
        const double* zdin = zd[l].data();
        Activation act = spec_.layer_activation(l);

        double* gw = grad.data() + net.weight_offset(l);
        double* gb = grad.data() + net.bias_offset(l);
        for (int k = 0; k < out; ++k) {
            double p = act_prime(act, a[k], zout[k]);
            double abark = zbar_[k] * p;
            double adotbark = 0.0;
            if (has_tan) {
                double s = act_second(act, a[k], zout[k], p);
                abark += zdotbar_[k] * adl[k] * s;
                adotbark = zdotbar_[k] * p;
            }
            abar_[k] = abark;
            adotbar_[k] = adotbark;
            double* gwrow = gw + static_cast<std::size_t>(k) * in;
            if (has_tan) {
                for (int i = 0; i < in; ++i) {
                    gwrow[i] += abark * zin[i] + adotbark * zdin[i];
                }
            } else {
                for (int i = 0; i < in; ++i) gwrow[i] += abark * zin[i];
            }
            gb[k] += abark;
        }
        // Propagate adjoints to the layer input: zbar = W^T abar.
        for (int i = 0; i < in; ++i) {
            double accz = 0.0, acct = 0.0;
            for (int k = 0; k < out; ++k) {
                const double wki = w[static_cast<std::size_t>(k) * in + i];
                accz += wki * abar_[k];
                if (has_tan) acct += wki * adotbar_[k];
            }
            zbar_[i] = accz;
            zdotbar_[i] = acct;
        }
        // zbar_/zdotbar_ now live in the layer-input indexing; the next
        // (shallower) layer reads them as its output adjoints.
    }
    if (!input_bar.empty()) {
        if (static_cast<int>(input_bar.size()) != spec_.input_dim) {
            throw ShapeError("input cotangent buffer size mismatch");
        }
        for (int i = 0; i < spec_.input_dim; ++i) input_bar[i] += zbar_[i];
    }
}

void write_mlp(std::ostream& os, const MlpNet& net) {
    const MlpSpec& s = net.spec();
    os << "mlp v1\n";
    os << "input_dim=" << s.input_dim << '\n';
    os << "hidden_layers=" << s.hidden_layers << '\n';
    os << "hidden_width=" << s.hidden_width << '\n';
    os << "output_dim=" << s.output_dim << '\n';
    os << "hidden_activation=" << activation_name(s.hidden_activation) << '\n';
    os << "output_activation=" << activation_name(s.output_activation) << '\n';
    os << "param_count=" << net.params().size() << '\n';
    for (double p : net.params()) os << format_double(p) << '\n';
}

namespace {

std::string expect_kv(std::istream& is, const std::string& key, const std::string& name) {
    std::string line;
    if (!std::getline(is, line)) throw IoError(name + ": truncated checkpoint");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string prefix = key + "=";
    if (line.rfind(prefix, 0) != 0) {
        throw IoError(name + ": expected '" + key + "=', got '" + line + "'");
    }
    return line.substr(prefix.size());
}

} // namespace

MlpNet read_mlp(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line)) throw IoError(name + ": empty checkpoint");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "mlp v1") throw IoError(name + ": unknown checkpoint version '" + line + "'");
    MlpSpec s;
    s.input_dim = static_cast<int>(parse_int(expect_kv(is, "input_dim", name), "input_dim"));
    s.hidden_layers =
        static_cast<int>(parse_int(expect_kv(is, "hidden_layers", name), "hidden_layers"));
    s.hidden_width =
        static_cast<int>(parse_int(expect_kv(is, "hidden_width", name), "hidden_width"));
    s.output_dim = static_cast<int>(parse_int(expect_kv(is, "output_dim", name), "output_dim"));
    s.hidden_activation = activation_from_name(expect_kv(is, "hidden_activation", name));
    s.output_activation = activation_from_name(expect_kv(is, "output_activation", name));
    std::size_t n =
        static_cast<std::size_t>(parse_int(expect_kv(is, "param_count", name), "param_count"));
    MlpNet net(s);
    if (n != net.params().size()) {
        throw IoError(name + ": param_count does not match the spec");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(is, line)) throw IoError(name + ": truncated parameter list");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        net.params()[i] = parse_double(line, "parameter");
    }
    return net;
}

} // namespace ringlwr
