#ifndef RINGLWR_MLP_HPP
#define RINGLWR_MLP_HPP

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ringlwr/errors.hpp"

namespace ringlwr {

/// All activations are C2; the physics residual differentiates the network
/// once and the loss differentiates that again.
enum class Activation { Identity, Tanh, Softplus };

Activation activation_from_name(std::string_view name);
std::string activation_name(Activation a);

struct MlpSpec {
    int input_dim = 1;
    int hidden_layers = 1;
    int hidden_width = 8;
    int output_dim = 1;
    Activation hidden_activation = Activation::Tanh;
    Activation output_activation = Activation::Identity;

    void validate() const;
    /// Weight layers, counting the output layer; hidden_layers may be 0.
    int n_layers() const { return hidden_layers + 1; }
    int layer_in(int l) const { return l == 0 ? input_dim : hidden_width; }
    int layer_out(int l) const { return l == n_layers() - 1 ? output_dim : hidden_width; }
    Activation layer_activation(int l) const {
        return l == n_layers() - 1 ? output_activation : hidden_activation;
    }
    std::size_t param_count() const;

    bool operator==(const MlpSpec&) const = default;
};

/// Dense feedforward network over a flat parameter vector. Layout is
/// layer-major, weights (row-major) then biases within each layer; the
/// layout is part of the checkpoint format.
class MlpNet {
public:
    explicit MlpNet(MlpSpec spec);

    /// Glorot-uniform weights, zero biases. Draw order: layers in order,
    /// each weight matrix row-major. Every random number comes from `rng`.
    static MlpNet glorot(MlpSpec spec, std::mt19937_64& rng);

    const MlpSpec& spec() const { return spec_; }
    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    void set_params(std::span<const double> p);

    const double* weights(int layer) const { return params_.data() + w_off_[layer]; }
    const double* biases(int layer) const { return params_.data() + b_off_[layer]; }
    std::size_t weight_offset(int layer) const { return w_off_[layer]; }
    std::size_t bias_offset(int layer) const { return b_off_[layer]; }

    /// Plain forward pass; returns the output vector.
    std::vector<double> forward(std::span<const double> input) const;

    /// Accumulates d(cotangent . output)/d(params) into grad.
    void grad_params(std::span<const double> input,
                     std::span<const double> output_cotangent,
                     std::span<double> grad) const;

    /// Output-by-input Jacobian, row-major [output_dim][input_dim].
    std::vector<double> grad_input(std::span<const double> input) const;

    /// Accumulates d(sum_ij cot[i][j] * dOutput_i/dInput_j)/d(params) into
    /// grad; cot is row-major [output_dim][input_dim].
    void grad_params_of_input_grad(std::span<const double> input,
                                   std::span<const double> cot_on_input_grad,
                                   std::span<double> grad) const;

private:
    MlpSpec spec_;
    std::vector<double> params_;
    std::vector<std::size_t> w_off_, b_off_;
};

/// Reusable single-input evaluation state: per-layer pre/post activations,
/// two independent first-order tangent streams, and one second-order
/// stream. The hot training loop keeps one MlpEval per shifted point so
/// backward sweeps can run after the residual's cotangents are known.
class MlpEval {
public:
    explicit MlpEval(const MlpSpec& spec);

    /// Forward pass; invalidates previous tangent streams.
    void forward(const MlpNet& net, std::span<const double> input);

    /// First-order tangent (directional derivative) along `dir`, stored in
    /// stream 0 or 1. Requires a prior forward with the same net/params.
    void tangent(const MlpNet& net, std::span<const double> dir, int stream);

    /// Second-order tangent along stream 0's direction (the direction's own
    /// second derivative is zero: straight-line curves only).
    void tangent_second(const MlpNet& net);

    double value(int k = 0) const { return z_.back()[k]; }
    double tangent_value(int stream, int k = 0) const { return zdot_[stream].back()[k]; }
    double tangent_second_value(int k = 0) const { return zddot_.back()[k]; }

    /// Accumulates into grad the parameter gradient of
    ///   sum_k value_bar[k] * output_k + sum_k tangent_bar[k] * d_dir output_k
    /// using the tangent stream `stream` (pass tangent_bar empty and any
    /// stream for a pure value backward). When input_bar is non-null it
    /// receives d/d(input) of the same scalar (accumulated).
    void backward(const MlpNet& net, std::span<const double> value_bar,
                  std::span<const double> tangent_bar, int stream,
                  std::span<double> grad, std::span<double> input_bar = {});

private:
    MlpSpec spec_;
    // z_[0] is the input; z_[l+1] = act(a_[l]). adot/zdot mirror them per
    // tangent stream; addot/zddot hold the second-order stream.
    std::vector<std::vector<double>> z_, a_;
    std::vector<std::vector<double>> zdot_[2], adot_[2];
    std::vector<std::vector<double>> zddot_, addot_;
    std::vector<double> zbar_, abar_, zdotbar_, adotbar_;
};

/// Text checkpoint block: versioned header with the spec, then one
/// parameter per line; round-trips bit-exactly.
void write_mlp(std::ostream& os, const MlpNet& net);
MlpNet read_mlp(std::istream& is, const std::string& name);

} // namespace ringlwr

#endif
