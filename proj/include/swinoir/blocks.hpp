#pragma once

#include <utility>
#include <vector>

#include "swinoir/rng.hpp"
#include "swinoir/tensor.hpp"

namespace swinoir {

// Non-overlapping M x M windows over an H x W feature map.
struct WindowSpec {
  int window = 8;
  int height = 0;
  int width = 0;

  void validate() const;
  int window_count() const { return (height / window) * (width / window); }
};

// Window attention weights. Projections are square (no bias, matching the
// Q = x P_Q formulation); the relative position bias table has one row per
// offset (dy, dx) in [-(M-1), M-1]^2 and one column per head.
struct AttentionParams {
  Tensor proj_q;      // [C, C]
  Tensor proj_k;      // [C, C]
  Tensor proj_v;      // [C, C]
  Tensor proj_out;    // [C, C]
  Tensor bias_table;  // [(2M-1)^2, heads]
  int heads = 1;
  int window = 8;

  int channels() const { return proj_q.dim(0); }
  int head_dim() const { return channels() / heads; }
};

// One transformer layer: pre-norm window attention plus pre-norm MLP, both
// with residual adds.
struct StlParams {
  Tensor norm1_gamma, norm1_beta;
  AttentionParams attn;
  Tensor norm2_gamma, norm2_beta;
  Tensor mlp_w1, mlp_b1;  // C -> ratio*C
  Tensor mlp_w2, mlp_b2;  // ratio*C -> C
};

// A block: L transformer layers, a trailing 3x3 convolution, and a residual
// from the block input. Blocks fed by more than one earlier block also carry
// a 1x1 fusion convolution that projects the concatenated inputs back to C.
struct IdstbParams {
  std::vector<StlParams> stls;
  Tensor conv_kernel;    // [3, 3, C, C]
  Tensor conv_bias;      // [C]
  Tensor fusion_kernel;  // [1, 1, fan_in*C, C]; undefined when fan_in <= 1
  Tensor fusion_bias;    // [C]; undefined when fan_in <= 1

  bool has_fusion() const { return fusion_kernel.defined(); }
};

// Multi-head window attention over x = [tokens, C] for a single window or
// [windows, tokens, C] for all windows of an image at once.
Tensor wmsa(const Tensor& x, const AttentionParams& params);

// x -> x + W-MSA(LN(x)) windowwise, then x -> x + MLP(LN(x)) pointwise.
Tensor stl_forward(const Tensor& x, const StlParams& params, const WindowSpec& spec);

// Channel-concatenates the features (ordered by ascending source block) and
// projects back to C channels with the given 1x1 convolution.
Tensor fuse_dense_inputs(const std::vector<Tensor>& features,
                         const Tensor& fusion_kernel, const Tensor& fusion_bias);

// Conv3x3(STL_L(...STL_1(fin)...)) + fin. The input must already be fused.
Tensor idstb_forward(const Tensor& fin, const IdstbParams& params,
                     const WindowSpec& spec);

// Parameter construction. Projections and convolution kernels start from a
// truncated normal (std 0.02); biases, norm betas and the bias table start at
// zero; norm gammas at one. Fusion kernels start as an average of their
// inputs plus the same truncated-normal noise.
AttentionParams init_attention_params(int channels, int heads, int window, Rng& rng);
StlParams init_stl_params(int channels, int heads, int window, double mlp_ratio,
                          Rng& rng);
IdstbParams init_idstb_params(int channels, int stl_count, int heads, int window,
                              double mlp_ratio, int fan_in, Rng& rng);

// Appends (name, tensor) pairs for every trainable tensor, prefixing names
// with `prefix`.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;
void collect_parameters(const std::string& prefix, const StlParams& p, NamedTensors& out);
void collect_parameters(const std::string& prefix, const IdstbParams& p, NamedTensors& out);

}  // namespace swinoir
