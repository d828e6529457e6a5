#include "swinoir/blocks.hpp"

#include <cmath>

#include "swinoir/ops.hpp"

namespace swinoir {

namespace {

Tensor trunc_normal(std::vector<int> shape, Rng& rng, double std_dev = 0.02) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  double* d = t.mutable_data();
  for (long long i = 0; i < t.numel(); ++i) d[i] = rng.truncated_normal(std_dev);
  return t;
}

constexpr double kNormEps = 1e-5;

}  // namespace

void WindowSpec::validate() const {
  if (window < 1 || height < 1 || width < 1) {
    throw std::invalid_argument("window spec fields must be positive");
  }
  if (height % window != 0 || width % window != 0) {
    throw ShapeError("window " + std::to_string(window) + " does not divide " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
}

Tensor wmsa(const Tensor& x, const AttentionParams& params) {
  const int c = x.dim(-1);
  if (c != params.channels()) {
    throw ShapeError("wmsa: input " + shape_to_string(x.shape()) +
                     " does not match projection " +
                     shape_to_string(params.proj_q.shape()));
  }
  const int tokens = x.dim(-2);
  if (tokens != params.window * params.window) {
    throw ShapeError("wmsa: token count of " + shape_to_string(x.shape()) +
                     " does not match window " + std::to_string(params.window));
  }
  const int dk = params.head_dim();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  Tensor q = matmul(x, params.proj_q);
  Tensor k = matmul(x, params.proj_k);
  Tensor v = matmul(x, params.proj_v);

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(static_cast<size_t>(params.heads));
  for (int h = 0; h < params.heads; ++h) {
    Tensor qh = slice_lastdim(q, h * dk, dk);
    Tensor kh = slice_lastdim(k, h * dk, dk);
    Tensor vh = slice_lastdim(v, h * dk, dk);
    Tensor scores = scale(matmul(qh, transpose_last2(kh)), inv_sqrt_dk);
    scores = add(scores, relative_position_bias(params.bias_table, params.window, h));
    head_outputs.push_back(matmul(softmax_lastdim(scores), vh));
  }
  return matmul(concat_lastdim(head_outputs), params.proj_out);
}

Tensor stl_forward(const Tensor& x, const StlParams& params, const WindowSpec& spec) {
  spec.validate();
  if (x.ndim() != 3 || x.dim(0) != spec.height || x.dim(1) != spec.width) {
    throw ShapeError("stl_forward: input " + shape_to_string(x.shape()) +
                     " does not match spec " + std::to_string(spec.height) + "x" +
                     std::to_string(spec.width));
  }
  // Attention half: x + W-MSA(LN(x)) computed windowwise.
  Tensor windows = window_partition(layer_norm(x, params.norm1_gamma, params.norm1_beta, kNormEps),
                                    spec.window);
  Tensor attended = window_merge(wmsa(windows, params.attn), spec.window,
                                 spec.height, spec.width);
  Tensor x1 = add(x, attended);

  // MLP half: x + MLP(LN(x)) applied per position.
  const int c = x.dim(2);
  Tensor flat = reshape(layer_norm(x1, params.norm2_gamma, params.norm2_beta, kNormEps),
                        {spec.height * spec.width, c});
  Tensor hidden = gelu(add(matmul(flat, params.mlp_w1), params.mlp_b1));
  Tensor mlp_out = reshape(add(matmul(hidden, params.mlp_w2), params.mlp_b2),
                           {spec.height, spec.width, c});
  return add(x1, mlp_out);
}

Tensor fuse_dense_inputs(const std::vector<Tensor>& features,
                         const Tensor& fusion_kernel, const Tensor& fusion_bias) {
  if (features.empty()) {
    throw std::invalid_argument("fuse_dense_inputs: empty feature list");
  }
  for (const Tensor& f : features) {
    if (f.shape() != features[0].shape()) {
      throw ShapeError("fuse_dense_inputs: feature shapes " +
                       shape_to_string(f.shape()) + " and " +
                       shape_to_string(features[0].shape()) + " differ");
    }
  }
  Tensor stacked = features.size() == 1 ? features[0] : concat_lastdim(features);
  return conv2d(stacked, fusion_kernel, fusion_bias);
}

Tensor idstb_forward(const Tensor& fin, const IdstbParams& params,
                     const WindowSpec& spec) {
  Tensor x = fin;
  for (const StlParams& stl : params.stls) {
    x = stl_forward(x, stl, spec);
  }
  return add(conv2d(x, params.conv_kernel, params.conv_bias), fin);
}

AttentionParams init_attention_params(int channels, int heads, int window, Rng& rng) {
  if (channels % heads != 0) {
    throw std::invalid_argument("channels " + std::to_string(channels) +
                                " not divisible by heads " + std::to_string(heads));
  }
  AttentionParams p;
  p.heads = heads;
  p.window = window;
  p.proj_q = trunc_normal({channels, channels}, rng);
  p.proj_k = trunc_normal({channels, channels}, rng);
  p.proj_v = trunc_normal({channels, channels}, rng);
  p.proj_out = trunc_normal({channels, channels}, rng);
  const int span = 2 * window - 1;
  p.bias_table = Tensor::zeros({span * span, heads}, true);
  return p;
}

StlParams init_stl_params(int channels, int heads, int window, double mlp_ratio,
                          Rng& rng) {
  if (mlp_ratio <= 0.0) throw std::invalid_argument("mlp_ratio must be positive");
  StlParams p;
  p.norm1_gamma = Tensor::full({channels}, 1.0, true);
  p.norm1_beta = Tensor::zeros({channels}, true);
  p.attn = init_attention_params(channels, heads, window, rng);
  p.norm2_gamma = Tensor::full({channels}, 1.0, true);
  p.norm2_beta = Tensor::zeros({channels}, true);
  const int hidden = std::max(1, static_cast<int>(channels * mlp_ratio));
  p.mlp_w1 = trunc_normal({channels, hidden}, rng);
  p.mlp_b1 = Tensor::zeros({hidden}, true);
  p.mlp_w2 = trunc_normal({hidden, channels}, rng);
  p.mlp_b2 = Tensor::zeros({channels}, true);
  return p;
}

IdstbParams init_idstb_params(int channels, int stl_count, int heads, int window,
                              double mlp_ratio, int fan_in, Rng& rng) {
  if (stl_count < 1) throw std::invalid_argument("stl_count must be >= 1");
  IdstbParams p;
  p.stls.reserve(static_cast<size_t>(stl_count));
  for (int i = 0; i < stl_count; ++i) {
    p.stls.push_back(init_stl_params(channels, heads, window, mlp_ratio, rng));
  }
  p.conv_kernel = trunc_normal({3, 3, channels, channels}, rng);
  p.conv_bias = Tensor::zeros({channels}, true);
  if (fan_in > 1) {
    // Averaging map over the fused inputs plus noise.
    p.fusion_kernel = trunc_normal({1, 1, fan_in * channels, channels}, rng);
    double* kd = p.fusion_kernel.mutable_data();
    const double share = 1.0 / fan_in;
    for (int input = 0; input < fan_in; ++input) {
      for (int c = 0; c < channels; ++c) {
        kd[static_cast<size_t>(input * channels + c) * channels + c] += share;
      }
    }
    p.fusion_bias = Tensor::zeros({channels}, true);
  }
  return p;
}

void collect_parameters(const std::string& prefix, const StlParams& p, NamedTensors& out) {
  out.emplace_back(prefix + ".norm1.gamma", p.norm1_gamma);
  out.emplace_back(prefix + ".norm1.beta", p.norm1_beta);
  out.emplace_back(prefix + ".attn.proj_q", p.attn.proj_q);
  out.emplace_back(prefix + ".attn.proj_k", p.attn.proj_k);
  out.emplace_back(prefix + ".attn.proj_v", p.attn.proj_v);
  out.emplace_back(prefix + ".attn.proj_out", p.attn.proj_out);
  out.emplace_back(prefix + ".attn.bias_table", p.attn.bias_table);
  out.emplace_back(prefix + ".norm2.gamma", p.norm2_gamma);
  out.emplace_back(prefix + ".norm2.beta", p.norm2_beta);
  out.emplace_back(prefix + ".mlp.w1", p.mlp_w1);
  out.emplace_back(prefix + ".mlp.b1", p.mlp_b1);
  out.emplace_back(prefix + ".mlp.w2", p.mlp_w2);
  out.emplace_back(prefix + ".mlp.b2", p.mlp_b2);
}

void collect_parameters(const std::string& prefix, const IdstbParams& p, NamedTensors& out) {
  for (size_t i = 0; i < p.stls.size(); ++i) {
    collect_parameters(prefix + ".stl" + std::to_string(i + 1), p.stls[i], out);
  }
  out.emplace_back(prefix + ".conv.kernel", p.conv_kernel);
  out.emplace_back(prefix + ".conv.bias", p.conv_bias);
  if (p.has_fusion()) {
    out.emplace_back(prefix + ".fusion.kernel", p.fusion_kernel);
    out.emplace_back(prefix + ".fusion.bias", p.fusion_bias);
  }
}

}  // namespace swinoir
