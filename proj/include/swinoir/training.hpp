#pragma once

#include <string>
#include <vector>

#include "swinoir/image.hpp"
#include "swinoir/model.hpp"
#include "swinoir/rng.hpp"

namespace swinoir {

enum class LossKind { kL1, kCharbonnier };

struct TrainConfig {
  int epochs = 1000;
  int steps_per_epoch = 50;
  double base_lr = 5e-4;
  std::vector<int> lr_halving_epochs = {300, 600, 900};
  double beta1 = 0.9;
  double beta2 = 0.9;  // as configured for this architecture; 0.999 is the usual Adam default
  double weight_decay = 0.0;
  double adam_eps = 1e-8;
  int batch_size = 0;  // 0 picks the per-scale default: 64 (x2), 48 (x3), 24 (x4)
  int patch_size = 32;  // LR pixels; must be a multiple of the model window
  uint64_t seed = 0;
  LossKind loss = LossKind::kL1;
  double charbonnier_eps = 1e-6;
  bool augment = false;  // 90-degree rotations and flips, applied to both halves
  double stop_at_loss = 0.0;  // stop after an epoch whose mean loss falls below; 0 disables
  int checkpoint_interval = 0;  // epochs between checkpoints; 0 disables
  std::string checkpoint_dir;

  void validate() const;
  int batch_for_scale(int scale) const;
};

// Aligned low-resolution / high-resolution pair.
struct ImagePair {
  Image lr;
  Image hr;
  int scale = 1;
  std::string degradation;  // provenance tag, e.g. "bicubic"
};

// lr = bicubic downscale of hr by factor s. hr is cropped to a multiple of s
// first so the pair dimensions align exactly.
ImagePair synthesize_pair(const Image& hr, int scale);

// Aligned random crop: LR patch of patch_size^2 at (y, x), HR patch of
// (patch_size*s)^2 at (y*s, x*s). With cfg.augment, a random rotation/flip is
// applied identically to both halves.
ImagePair sample_patch(const ImagePair& pair, int patch_size, Rng& rng,
                       bool augment = false);

// base_lr halved once for every halving epoch <= epoch.
double lr_at_epoch(int epoch, const TrainConfig& cfg);

// Decoupled-weight-decay Adam over a fixed parameter list.
class AdamW {
 public:
  AdamW(NamedTensors params, double beta1, double beta2, double eps,
        double weight_decay);

  // param <- param - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * param).
  // Every parameter must hold a gradient; a missing one is a contract error
  // naming the parameter.
  void step(double lr);
  void zero_grads();
  long long step_count() const { return step_count_; }

 private:
  NamedTensors params_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  double beta1_, beta2_, eps_, weight_decay_;
  long long step_count_ = 0;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double val_psnr = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::vector<double> step_losses;  // one entry per optimizer step
  std::vector<std::string> checkpoints_written;
};

// Runs cfg.epochs of batched patch steps. The last dataset pair is held out
// for validation PSNR when more than one pair is given; with a single pair it
// doubles as training and validation data. Deterministic for a fixed seed.
TrainReport train(SwinOirModel& model, const std::vector<ImagePair>& dataset,
                  const TrainConfig& cfg);

}  // namespace swinoir
