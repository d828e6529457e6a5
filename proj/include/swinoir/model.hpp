#pragma once

#include <cstdint>

#include "swinoir/blocks.hpp"
#include "swinoir/topology.hpp"

namespace swinoir {

struct ModelConfig {
  int blocks = 4;          // m
  int stls_per_block = 4;  // L
  int channels = 60;       // C
  int window = 8;          // M
  int heads = 6;
  int upscale = 2;         // s
  int input_channels = 3;
  double mlp_ratio = 2.0;
  ConnectionKind connection = ConnectionKind::kIntervalDense;

  void validate() const;
};

// Pre-feature 3x3 convolution, a stack of connected blocks plus a trailing
// 3x3 convolution, a skip add of the pre features, and a sub-pixel
// reconstruction head (3x3 conv to C*s^2 channels, pixel shuffle by s,
// 3x3 conv back to the input channel count).
class SwinOirModel {
 public:
  SwinOirModel() = default;
  SwinOirModel(const ModelConfig& config, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ConnectionTopology& topology() const { return topology_; }
  const IdstbParams& block_params(int block) const;  // 1-based

  // image [H, W, input_channels] with H, W divisible by the window size
  // -> [H*s, W*s, input_channels]. Raw values, never clamped; clamping to
  // the pixel range happens only when writing files.
  Tensor forward(const Tensor& image) const;

  // Stable-ordered (name, tensor) view of every trainable parameter. The
  // handles share storage with the model.
  NamedTensors parameters() const;
  long long parameter_count() const;
  void zero_grads() const;

 private:
  ModelConfig config_;
  ConnectionTopology topology_;
  Tensor pre_kernel_, pre_bias_;
  std::vector<IdstbParams> blocks_;
  Tensor trailing_kernel_, trailing_bias_;
  Tensor up_kernel_, up_bias_;
  Tensor out_kernel_, out_bias_;
};

// Mean absolute difference over all elements.
Tensor loss_l1(const Tensor& predicted, const Tensor& target);

// Mean over elements of sqrt((p - t)^2 + epsilon).
Tensor loss_charbonnier(const Tensor& predicted, const Tensor& target,
                        double epsilon = 1e-6);

}  // namespace swinoir
