#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ntnpred/tensor.hpp"

namespace ntnpred {

enum class LayerKind { Conv2D, TConv2D, LSTM, BatchNorm, LeakyReLU, FrequencyFlatten, TimeFlip, Add };
enum class Activation { None, LeakyReLU };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view s);
std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// (frequency, time) pair used for kernel extents and strides.
struct Extent2 {
    std::size_t freq = 1;
    std::size_t time = 1;
    friend bool operator==(const Extent2&, const Extent2&) = default;
};

/// Padding for Conv2D, cropping for TConv2D; order is top, bottom, left, right
/// where top/bottom act on the frequency axis and left/right on the time axis.
struct Pad4 {
    std::size_t top = 0;
    std::size_t bottom = 0;
    std::size_t left = 0;
    std::size_t right = 0;
    friend bool operator==(const Pad4&, const Pad4&) = default;
};

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::Conv2D;
    std::size_t filters_or_units = 1;
    Extent2 kernel{};
    Extent2 stride{};
    Pad4 pad_or_crop{};
    Activation activation = Activation::None;

    /// Throws ConfigError on zero extents/strides/filters.
    void validate() const;
    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kBatchNormEps = 1e-5;

// ---------------------------------------------------------------------------
// Shape rules. Input shapes are (Lf, Lt, C) or (B, Lf, Lt, C).

Shape conv2d_output_shape(const Shape& input, const LayerSpec& spec);
Shape tconv2d_output_shape(const Shape& input, const LayerSpec& spec);

// ---------------------------------------------------------------------------
// Conv2D: cross-correlation over all input channels, zero padding, bias,
// optional LeakyReLU. weight is (C_out, C_in, Wf, Wt), bias is (C_out).

Tensor conv2d_forward(const Tensor& input, const LayerSpec& spec, const Tensor& weight, const Tensor& bias);

struct ParamGrads {
    Tensor input;
    std::vector<Tensor> params;  // same order as the layer's parameter list
};

/// saved_output is only read when spec.activation is LeakyReLU.
ParamGrads conv2d_backward(const Tensor& grad_out, const Tensor& saved_input, const LayerSpec& spec,
                           const Tensor& weight, const Tensor* saved_output = nullptr);

// TConv2D: adjoint of conv2d with the same kernel/stride and crop in place of
// padding, plus a bias per output channel. weight is (C_in, C_out, Wf, Wt).

Tensor tconv2d_forward(const Tensor& input, const LayerSpec& spec, const Tensor& weight, const Tensor& bias);
ParamGrads tconv2d_backward(const Tensor& grad_out, const Tensor& saved_input, const LayerSpec& spec,
                            const Tensor& weight, const Tensor* saved_output = nullptr);

// ---------------------------------------------------------------------------
// LSTM over (Lt, N) or (B, Lt, N); gate order i, f, g, o.
// w_input (4U, N), w_recurrent (4U, U), bias (4U). Zero initial state.

struct LstmCache {
    Tensor input;   // (B, T, N)
    Tensor gates;   // (B, T, 4U), post-nonlinearity
    Tensor cell;    // (B, T, U)
    Tensor hidden;  // (B, T, U)
};

Tensor lstm_forward(const Tensor& input, std::size_t units, const Tensor& w_input, const Tensor& w_recurrent,
                    const Tensor& bias, LstmCache* cache = nullptr);
ParamGrads lstm_backward(const Tensor& grad_out, const LstmCache& cache, const Tensor& w_input,
                         const Tensor& w_recurrent);

std::size_t lstm_param_count(std::size_t inputs, std::size_t units);

// ---------------------------------------------------------------------------
// BatchNorm over the last axis. Train mode normalizes with batch statistics
// (biased variance) and blends them into the running statistics; Infer mode
// uses the running statistics.

enum class BnMode { Train, Infer };

struct BnCache {
    BnMode mode = BnMode::Infer;
    Tensor normalized;
    std::vector<double> inv_std;
};

Tensor batchnorm_forward(const Tensor& input, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                         Tensor& running_var, BnMode mode, double momentum = 0.1, BnCache* cache = nullptr);
ParamGrads batchnorm_backward(const Tensor& grad_out, const BnCache& cache, const Tensor& gamma);

// ---------------------------------------------------------------------------
// Elementwise and reindexing layers.

double leaky_relu(double x, double slope = kLeakySlope);
Tensor leaky_relu(const Tensor& input, double slope = kLeakySlope);
/// Works with either the saved input or the saved output (same sign).
Tensor leaky_relu_backward(const Tensor& grad_out, const Tensor& saved, double slope = kLeakySlope);

/// (B, Lf, Lt, C) -> (B, 1, Lt, Lf*C); channel q = f*C + c.
Tensor frequency_flatten(const Tensor& input);
/// Inverse of frequency_flatten; also its gradient.
Tensor frequency_unflatten(const Tensor& input, std::size_t freq_extent);

/// Mirrors the time axis: index l -> Lt-1-l. Involution, self-adjoint.
Tensor time_flip(const Tensor& input);

Tensor add(const Tensor& a, const Tensor& b);

// ---------------------------------------------------------------------------

double mse_loss(const Tensor& prediction, const Tensor& target);
Tensor mse_loss_grad(const Tensor& prediction, const Tensor& target);

}  // namespace ntnpred
