#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "selrcn/rng.hpp"
#include "selrcn/tape.hpp"
#include "selrcn/tensor.hpp"

/// Differentiable tensor operations. Every op takes the recording tape first;
/// an op is recorded only if one of its inputs requires a gradient.
namespace selrcn::ops {

// ---- linear algebra -------------------------------------------------------

/// [M×K]·[K×N] → [M×N].
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// x[N×D]·wᵀ + bias, with w[O×D] and optional bias[O].
Tensor linear(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias = {});

Tensor transpose(Tape& tape, const Tensor& a);

// ---- elementwise ----------------------------------------------------------

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor add_scalar(Tape& tape, const Tensor& a, double value);

enum class Activation { relu, sigmoid, tanh };

Tensor activation(Tape& tape, const Tensor& x, Activation kind);
inline Tensor relu(Tape& tape, const Tensor& x) { return activation(tape, x, Activation::relu); }
inline Tensor sigmoid(Tape& tape, const Tensor& x) { return activation(tape, x, Activation::sigmoid); }
inline Tensor tanh(Tape& tape, const Tensor& x) { return activation(tape, x, Activation::tanh); }

/// Inverted dropout. Identity (same tensor) when not training or p == 0.
Tensor dropout(Tape& tape, const Tensor& x, double p, Rng& rng, bool training);

// ---- reductions -----------------------------------------------------------

Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);

/// Mean over the contiguous axes [begin, end). The reduced axes are removed
/// from the shape (a full reduction yields shape [1]).
Tensor mean_axes(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end);

/// x[N×C×H×W] → [N×C], mean over each H×W plane.
Tensor global_avg_pool(Tape& tape, const Tensor& x);

/// Multiplies x by s broadcast over the contiguous axes [begin, end) of x.
/// s must have x's shape with those axes removed; e.g. x[N×C×H×W] with
/// s[N×C] and axes [2,4) scales every channel plane.
Tensor scale_broadcast(Tape& tape, const Tensor& x, const Tensor& s, std::size_t begin, std::size_t end);

// ---- probability ----------------------------------------------------------

/// Softmax along `axis` (negative counts from the back), max-shifted.
Tensor softmax(Tape& tape, const Tensor& x, int axis = -1);

/// Mean over rows of −log softmax(logits)[label]. logits is [N×C].
Tensor cross_entropy(Tape& tape, const Tensor& logits, std::span<const std::size_t> labels);

// ---- layout ---------------------------------------------------------------

Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

/// Columns [begin, end) of a matrix.
Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end);

/// Selects entries along axis 0; indices may repeat.
Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> rows);

/// Concatenation along axis 0. All parts share their trailing shape.
Tensor concat_rows(Tape& tape, std::span<const Tensor> parts);

// ---- convolutional --------------------------------------------------------

/// x[N×Cin×H×W] ⊛ w[Cout×Cin×k×k] with zero padding.
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& weight, std::size_t stride, std::size_t pad);

/// Max pooling with implicit −∞ padding. Ties resolve to the first maximum
/// in scan order.
Tensor max_pool2d(Tape& tape, const Tensor& x, std::size_t kernel, std::size_t stride, std::size_t pad);

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel normalization of x[N×C×H×W]. In training mode batch statistics
/// are used and the running buffers are updated in place (unbiased variance);
/// in evaluation mode the running buffers are used.
Tensor batch_norm2d(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                    Tensor& running_var, const BatchNormOptions& options);

}  // namespace selrcn::ops
