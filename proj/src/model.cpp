#include "swinoir/model.hpp"

#include <algorithm>

#include "swinoir/ops.hpp"

namespace swinoir {

namespace {

Tensor trunc_normal_kernel(std::vector<int> shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  double* d = t.mutable_data();
  for (long long i = 0; i < t.numel(); ++i) d[i] = rng.truncated_normal(0.02);
  return t;
}

}  // namespace

void ModelConfig::validate() const {
  if (blocks < 1) throw std::invalid_argument("blocks must be >= 1");
  if (stls_per_block < 1) throw std::invalid_argument("stls_per_block must be >= 1");
  if (channels < 1 || heads < 1 || channels % heads != 0) {
    throw std::invalid_argument("channels " + std::to_string(channels) +
                                " must be a positive multiple of heads " +
                                std::to_string(heads));
  }
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (upscale < 1) throw std::invalid_argument("upscale must be >= 1");
  if (input_channels < 1) throw std::invalid_argument("input_channels must be >= 1");
  if (mlp_ratio <= 0.0) throw std::invalid_argument("mlp_ratio must be positive");
}

SwinOirModel::SwinOirModel(const ModelConfig& config, uint64_t seed)
    : config_(config), topology_(make_topology(config.connection, config.blocks)) {
  config_.validate();
  Rng rng(seed);
  const int c = config_.channels;
  pre_kernel_ = trunc_normal_kernel({3, 3, config_.input_channels, c}, rng);
  pre_bias_ = Tensor::zeros({c}, true);
  blocks_.reserve(static_cast<size_t>(config_.blocks));
  for (int n = 1; n <= config_.blocks; ++n) {
    const int fan_in = std::max<int>(1, static_cast<int>(topology_.sources_of(n).size()));
    blocks_.push_back(init_idstb_params(c, config_.stls_per_block, config_.heads,
                                        config_.window, config_.mlp_ratio, fan_in, rng));
  }
  trailing_kernel_ = trunc_normal_kernel({3, 3, c, c}, rng);
  trailing_bias_ = Tensor::zeros({c}, true);
  const int up_channels = c * config_.upscale * config_.upscale;
  up_kernel_ = trunc_normal_kernel({3, 3, c, up_channels}, rng);
  up_bias_ = Tensor::zeros({up_channels}, true);
  out_kernel_ = trunc_normal_kernel({3, 3, c, config_.input_channels}, rng);
  out_bias_ = Tensor::zeros({config_.input_channels}, true);
}

const IdstbParams& SwinOirModel::block_params(int block) const {
  if (block < 1 || block > config_.blocks) {
    throw std::invalid_argument("block " + std::to_string(block) + " out of range 1.." +
                                std::to_string(config_.blocks));
  }
  return blocks_[static_cast<size_t>(block - 1)];
}

Tensor SwinOirModel::forward(const Tensor& image) const {
  if (image.ndim() != 3 || image.dim(2) != config_.input_channels) {
    throw ShapeError("forward: expected (H, W, " + std::to_string(config_.input_channels) +
                     "), got " + shape_to_string(image.shape()));
  }
  WindowSpec spec{config_.window, image.dim(0), image.dim(1)};
  spec.validate();

  Tensor pre = conv2d(image, pre_kernel_, pre_bias_);

  // Block n consumes the fused outputs of its source blocks; block 1
  // consumes the pre features directly.
  std::vector<Tensor> block_outputs(static_cast<size_t>(config_.blocks));
  for (int n = 1; n <= config_.blocks; ++n) {
    const auto& sources = topology_.sources_of(n);
    const IdstbParams& params = blocks_[static_cast<size_t>(n - 1)];
    Tensor fin;
    if (sources.empty()) {
      fin = pre;
    } else if (sources.size() == 1) {
      fin = block_outputs[static_cast<size_t>(sources[0] - 1)];
    } else {
      std::vector<Tensor> gathered;
      gathered.reserve(sources.size());
      for (int src : sources) gathered.push_back(block_outputs[static_cast<size_t>(src - 1)]);
      fin = fuse_dense_inputs(gathered, params.fusion_kernel, params.fusion_bias);
    }
    block_outputs[static_cast<size_t>(n - 1)] = idstb_forward(fin, params, spec);
  }

  Tensor main = conv2d(block_outputs.back(), trailing_kernel_, trailing_bias_);
  Tensor fused = add(pre, main);

  Tensor up = conv2d(fused, up_kernel_, up_bias_);
  Tensor shuffled = pixel_shuffle(up, config_.upscale);
  return conv2d(shuffled, out_kernel_, out_bias_);
}

NamedTensors SwinOirModel::parameters() const {
  NamedTensors out;
  out.emplace_back("pre.kernel", pre_kernel_);
  out.emplace_back("pre.bias", pre_bias_);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    collect_parameters("block" + std::to_string(i + 1), blocks_[i], out);
  }
  out.emplace_back("trailing.kernel", trailing_kernel_);
  out.emplace_back("trailing.bias", trailing_bias_);
  out.emplace_back("up.kernel", up_kernel_);
  out.emplace_back("up.bias", up_bias_);
  out.emplace_back("out.kernel", out_kernel_);
  out.emplace_back("out.bias", out_bias_);
  return out;
}

long long SwinOirModel::parameter_count() const {
  long long n = 0;
  for (const auto& [name, tensor] : parameters()) n += tensor.numel();
  return n;
}

void SwinOirModel::zero_grads() const {
  for (auto& [name, tensor] : parameters()) {
    Tensor t = tensor;
    t.zero_grad();
  }
}

Tensor loss_l1(const Tensor& predicted, const Tensor& target) {
  if (predicted.shape() != target.shape()) {
    throw ShapeError("loss_l1: shapes " + shape_to_string(predicted.shape()) +
                     " and " + shape_to_string(target.shape()) + " differ");
  }
  return mean(abs(sub(predicted, target)));
}

Tensor loss_charbonnier(const Tensor& predicted, const Tensor& target, double epsilon) {
  if (predicted.shape() != target.shape()) {
    throw ShapeError("loss_charbonnier: shapes " + shape_to_string(predicted.shape()) +
                     " and " + shape_to_string(target.shape()) + " differ");
  }
  if (epsilon <= 0.0) throw std::invalid_argument("loss_charbonnier: epsilon must be positive");
  return mean(sqrt(add_scalar(square(sub(predicted, target)), epsilon)));
}

}  // namespace swinoir
