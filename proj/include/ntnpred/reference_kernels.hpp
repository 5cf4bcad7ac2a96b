#pragma once

// Serial, definition-level versions of the trainable layer kernels. They are
// slow and exist so tests can pin the OpenMP kernels in layers.hpp against an
// independent implementation; the benchmark target compares both.

#include "ntnpred/layers.hpp"

namespace ntnpred::reference {

Tensor conv2d_forward(const Tensor& input, const LayerSpec& spec, const Tensor& weight, const Tensor& bias);
ParamGrads conv2d_backward(const Tensor& grad_out, const Tensor& saved_input, const LayerSpec& spec,
                           const Tensor& weight);

Tensor tconv2d_forward(const Tensor& input, const LayerSpec& spec, const Tensor& weight, const Tensor& bias);
ParamGrads tconv2d_backward(const Tensor& grad_out, const Tensor& saved_input, const LayerSpec& spec,
                            const Tensor& weight);

Tensor lstm_forward(const Tensor& input, std::size_t units, const Tensor& w_input, const Tensor& w_recurrent,
                    const Tensor& bias);

}  // namespace ntnpred::reference
