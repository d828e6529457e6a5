#pragma once

#include "swinoir/tensor.hpp"

namespace swinoir {

// Differentiable tensor operations. Every op validates shapes up front,
// computes its forward value, and (when any input requires a gradient and a
// GradientTape is active) records a closure implementing its gradient rule.
// All ops are pure: inputs are never modified.

// Elementwise. add() also accepts a right operand whose shape is a trailing
// suffix of the left shape (bias vectors, per-window score offsets); the
// suffix is broadcast over the leading dimensions and its gradient is the
// sum over those dimensions.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor gelu(const Tensor& a);  // exact erf form: x * Phi(x)

// matmul of a[..., p, q] with b[..., q, r]; batch dimensions must agree or
// broadcast from size 1 (missing dimensions count as 1).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose_last2(const Tensor& a);

Tensor softmax_lastdim(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// x[H, W, Cin] * kernel[k, k, Cin, Cout] + bias[Cout], stride 1, zero padding
// (k-1)/2, cross-correlation convention, output [H, W, Cout]. k must be odd.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias);

// x[H, W, C*r^2] -> [H*r, W*r, C]:
//   out(y*r+dy, x*r+dx, c) = in(y, x, c*r^2 + dy*r + dx)
Tensor pixel_shuffle(const Tensor& x, int r);
Tensor pixel_unshuffle(const Tensor& x, int r);  // exact inverse

// Structural ops.
Tensor reshape(const Tensor& x, std::vector<int> new_shape);
Tensor slice_lastdim(const Tensor& x, int start, int count);
Tensor concat_lastdim(const std::vector<Tensor>& parts);

// x[H, W, C] -> [HW/M^2, M^2, C] with row-major window then row-major token
// ordering. H and W must be divisible by M.
Tensor window_partition(const Tensor& x, int window);
Tensor window_merge(const Tensor& w, int window, int height, int width);

// Relative position bias lookup for one attention head: table holds
// (2M-1)^2 rows, one per offset (dy, dx) in [-(M-1), M-1]^2, and the result
// is the [M^2, M^2] matrix B with B[i][j] = table[index(pos_i - pos_j), head].
Tensor relative_position_bias(const Tensor& table, int window, int head);

// Reductions to a scalar tensor of shape (1).
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

}  // namespace swinoir
