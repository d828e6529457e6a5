#include "swinoir/training.hpp"

#include <algorithm>
#include <cmath>

#include "swinoir/checkpoint.hpp"
#include "swinoir/enhance.hpp"
#include "swinoir/metrics.hpp"
#include "swinoir/ops.hpp"

namespace swinoir {

namespace {

Image flip_horizontal(const Image& img) {
  Image out = make_image(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
  return out;
}

Image rotate90(const Image& img) {
  Image out = make_image(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, img.height - 1 - y, c) = img.at(y, x, c);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (steps_per_epoch < 1) throw std::invalid_argument("steps_per_epoch must be >= 1");
  if (base_lr <= 0.0) throw std::invalid_argument("base_lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("betas must lie in [0, 1)");
  }
  for (size_t i = 1; i < lr_halving_epochs.size(); ++i) {
    if (lr_halving_epochs[i] <= lr_halving_epochs[i - 1]) {
      throw std::invalid_argument("lr_halving_epochs must be strictly increasing");
    }
  }
  if (patch_size < 1) throw std::invalid_argument("patch_size must be >= 1");
}

int TrainConfig::batch_for_scale(int scale) const {
  if (batch_size > 0) return batch_size;
  switch (scale) {
    case 2: return 64;
    case 3: return 48;
    case 4: return 24;
    default: return 16;
  }
}

ImagePair synthesize_pair(const Image& hr, int scale) {
  if (scale < 1) throw std::invalid_argument("synthesize_pair: scale must be >= 1");
  if (hr.height < scale || hr.width < scale) {
    throw std::invalid_argument("synthesize_pair: image " + std::to_string(hr.height) +
                                "x" + std::to_string(hr.width) +
                                " smaller than scale " + std::to_string(scale));
  }
  const int h = hr.height - hr.height % scale;
  const int w = hr.width - hr.width % scale;
  Image cropped = (h == hr.height && w == hr.width) ? hr : crop_image(hr, 0, 0, h, w);
  ImagePair pair;
  pair.hr = std::move(cropped);
  pair.lr = resize_bicubic(pair.hr, h / scale, w / scale);
  pair.scale = scale;
  pair.degradation = "bicubic";
  return pair;
}

ImagePair sample_patch(const ImagePair& pair, int patch_size, Rng& rng, bool augment) {
  if (patch_size > pair.lr.height || patch_size > pair.lr.width) {
    throw std::invalid_argument("sample_patch: patch " + std::to_string(patch_size) +
                                " larger than LR image " + std::to_string(pair.lr.height) +
                                "x" + std::to_string(pair.lr.width));
  }
  const int y = static_cast<int>(rng.below(static_cast<uint64_t>(pair.lr.height - patch_size + 1)));
  const int x = static_cast<int>(rng.below(static_cast<uint64_t>(pair.lr.width - patch_size + 1)));
  ImagePair out;
  out.scale = pair.scale;
  out.degradation = pair.degradation;
  out.lr = crop_image(pair.lr, y, x, patch_size, patch_size);
  out.hr = crop_image(pair.hr, y * pair.scale, x * pair.scale,
                      patch_size * pair.scale, patch_size * pair.scale);
  if (augment) {
    const uint64_t rotations = rng.below(4);
    const bool flip = rng.below(2) == 1;
    for (uint64_t i = 0; i < rotations; ++i) {
      out.lr = rotate90(out.lr);
      out.hr = rotate90(out.hr);
    }
    if (flip) {
      out.lr = flip_horizontal(out.lr);
      out.hr = flip_horizontal(out.hr);
    }
  }
  return out;
}

double lr_at_epoch(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw std::invalid_argument("epoch must be >= 0");
  int halvings = 0;
  for (int e : cfg.lr_halving_epochs) {
    if (e <= epoch) ++halvings;
  }
  return cfg.base_lr * std::pow(2.0, -halvings);
}

AdamW::AdamW(NamedTensors params, double beta1, double beta2, double eps,
             double weight_decay)
    : params_(std::move(params)),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      weight_decay_(weight_decay) {
  first_moment_.reserve(params_.size());
  second_moment_.reserve(params_.size());
  for (const auto& [name, tensor] : params_) {
    first_moment_.emplace_back(static_cast<size_t>(tensor.numel()), 0.0);
    second_moment_.emplace_back(static_cast<size_t>(tensor.numel()), 0.0);
  }
}

void AdamW::step(double lr) {
  ++step_count_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (size_t p = 0; p < params_.size(); ++p) {
    auto& [name, tensor] = params_[p];
    if (!tensor.has_grad()) {
      throw std::logic_error("adamw step: parameter '" + name + "' has no gradient");
    }
    Tensor t = tensor;
    const double* g = t.grad().data();
    double* w = t.mutable_data();
    double* m = first_moment_[p].data();
    double* v = second_moment_[p].data();
    const long long n = t.numel();
    for (long long i = 0; i < n; ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      w[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps_) + weight_decay_ * w[i]);
    }
  }
}

void AdamW::zero_grads() {
  for (auto& [name, tensor] : params_) {
    Tensor t = tensor;
    t.zero_grad();
  }
}

TrainReport train(SwinOirModel& model, const std::vector<ImagePair>& dataset,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  const int upscale = model.config().upscale;
  for (size_t i = 0; i < dataset.size(); ++i) {
    const ImagePair& p = dataset[i];
    if (p.scale != upscale) {
      throw std::invalid_argument("train: pair " + std::to_string(i) + " has scale " +
                                  std::to_string(p.scale) + ", model expects " +
                                  std::to_string(upscale));
    }
    if (p.hr.height != p.lr.height * upscale || p.hr.width != p.lr.width * upscale) {
      throw std::invalid_argument("train: pair " + std::to_string(i) +
                                  " dimensions are not lr * scale");
    }
  }
  if (cfg.patch_size % model.config().window != 0) {
    throw std::invalid_argument("train: patch_size " + std::to_string(cfg.patch_size) +
                                " is not a multiple of the window " +
                                std::to_string(model.config().window));
  }

  // Last pair is the validation pair whenever we can afford to hold one out.
  const size_t train_count = dataset.size() > 1 ? dataset.size() - 1 : dataset.size();
  const ImagePair& val_pair = dataset.back();
  MetricConfig val_metric;
  val_metric.channel_mode = ChannelMode::kRgbMean;
  val_metric.border_shave = upscale;

  TrainReport report;
  Rng rng(cfg.seed);
  AdamW optimizer(model.parameters(), cfg.beta1, cfg.beta2, cfg.adam_eps,
                  cfg.weight_decay);
  const int batch = cfg.batch_for_scale(upscale);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(epoch, cfg);
    double epoch_loss = 0.0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      GradientTape tape;
      Tensor batch_loss;
      for (int b = 0; b < batch; ++b) {
        const size_t pick = static_cast<size_t>(rng.below(train_count));
        const ImagePair patch = sample_patch(dataset[pick], cfg.patch_size, rng,
                                             cfg.augment);
        const Tensor predicted = model.forward(image_to_tensor(patch.lr));
        const Tensor target = image_to_tensor(patch.hr);
        Tensor sample_loss = cfg.loss == LossKind::kL1
                                 ? loss_l1(predicted, target)
                                 : loss_charbonnier(predicted, target, cfg.charbonnier_eps);
        batch_loss = b == 0 ? sample_loss : add(batch_loss, sample_loss);
      }
      if (batch > 1) batch_loss = scale(batch_loss, 1.0 / batch);
      tape.backward(batch_loss);
      optimizer.step(lr);
      optimizer.zero_grads();
      report.step_losses.push_back(batch_loss.item());
      epoch_loss += batch_loss.item();
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    stats.mean_loss = epoch_loss / cfg.steps_per_epoch;
    stats.val_psnr = psnr(to_metric_scale(upscale_image(model, val_pair.lr), val_metric),
                          to_metric_scale(clamp_image(val_pair.hr), val_metric), val_metric);
    report.epochs.push_back(stats);

    const bool last_epoch = epoch + 1 == cfg.epochs;
    const bool hit_target = cfg.stop_at_loss > 0.0 && stats.mean_loss < cfg.stop_at_loss;
    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_interval > 0 &&
        ((epoch + 1) % cfg.checkpoint_interval == 0 || last_epoch || hit_target)) {
      const std::string path =
          cfg.checkpoint_dir + "/epoch_" + std::to_string(epoch + 1) + ".ckpt";
      save_checkpoint(model, path);
      report.checkpoints_written.push_back(path);
    }
    if (hit_target) break;
  }
  return report;
}

}  // namespace swinoir
