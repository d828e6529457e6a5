// Command-line front end: topology inspection, training, metric evaluation
// and the two-stage detect-then-enhance pipeline.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "swinoir/checkpoint.hpp"
#include "swinoir/enhance.hpp"
#include "swinoir/metrics.hpp"
#include "swinoir/pipeline.hpp"
#include "swinoir/topology.hpp"
#include "swinoir/training.hpp"

namespace fs = std::filesystem;
using namespace swinoir;

namespace {

std::vector<std::string> list_images(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Plain "key = value" configuration lines; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

int run_topology(int blocks, const std::string& strategy, const std::string& dot_path) {
  const ConnectionKind kind = connection_kind_from_string(strategy);
  const ConnectionTopology topo = make_topology(kind, blocks);
  std::cout << "strategy: " << to_string(kind) << ", blocks: " << blocks << "\n";
  for (int n = 1; n <= blocks; ++n) {
    std::cout << "block " << n << " <- {";
    const auto& src = topo.sources_of(n);
    for (size_t i = 0; i < src.size(); ++i) std::cout << (i ? ", " : "") << src[i];
    std::cout << "}" << (n == 1 ? "  (pre features)" : "") << "\n";
  }
  if (!dot_path.empty()) {
    std::ofstream out(dot_path);
    out << topology_to_dot(topo, "connections");
    std::cout << "dot graph written to " << dot_path << "\n";
  }
  return 0;
}

int run_eval(const std::string& restored_dir, const std::string& reference_dir,
             const std::string& mode, int shave, const std::string& window,
             const std::string& csv_path) {
  MetricConfig cfg;
  cfg.channel_mode = mode == "rgb" ? ChannelMode::kRgbMean : ChannelMode::kLuminance;
  cfg.border_shave = shave;
  if (window == "gaussian") {
    cfg.window = SsimWindow::kGaussian;
    cfg.window_size = 11;
  }

  const auto restored = list_images(restored_dir);
  if (restored.empty()) {
    std::cerr << "no .ppm/.pgm images in " << restored_dir << "\n";
    return 1;
  }
  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path);
    csv << "image,psnr_db,ssim\n";
  }
  std::cout << "channel mode: " << (cfg.channel_mode == ChannelMode::kRgbMean ? "rgb" : "luminance")
            << ", border shave: " << shave << "\n";
  printf("%-32s %10s %8s\n", "image", "PSNR (dB)", "SSIM");
  double psnr_sum = 0.0, ssim_sum = 0.0;
  int counted = 0;
  for (const std::string& path : restored) {
    const std::string name = fs::path(path).filename().string();
    const fs::path ref = fs::path(reference_dir) / name;
    if (!fs::exists(ref)) {
      std::cerr << "skipping " << name << ": no reference image\n";
      continue;
    }
    const Image a = to_metric_scale(read_image(path), cfg);
    const Image b = to_metric_scale(read_image(ref.string()), cfg);
    const double p = psnr(a, b, cfg);
    const double s = ssim(a, b, cfg);
    printf("%-32s %10.4f %8.4f\n", name.c_str(), p, s);
    if (csv.is_open()) csv << name << "," << p << "," << s << "\n";
    psnr_sum += p;
    ssim_sum += s;
    ++counted;
  }
  if (counted == 0) {
    std::cerr << "no image pairs evaluated\n";
    return 1;
  }
  printf("%-32s %10.4f %8.4f\n", "mean", psnr_sum / counted, ssim_sum / counted);
  if (csv.is_open()) csv << "mean," << psnr_sum / counted << "," << ssim_sum / counted << "\n";
  return 0;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir) {
  const auto kv = read_config(config_path);
  auto get = [&kv](const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };

  ModelConfig mc;
  mc.blocks = std::stoi(get("blocks", "4"));
  mc.stls_per_block = std::stoi(get("stls_per_block", "4"));
  mc.channels = std::stoi(get("channels", "60"));
  mc.window = std::stoi(get("window", "8"));
  mc.heads = std::stoi(get("heads", "6"));
  mc.upscale = std::stoi(get("scale", "2"));
  mc.mlp_ratio = std::stod(get("mlp_ratio", "2.0"));
  mc.connection = connection_kind_from_string(get("connection", "interval-dense"));

  TrainConfig tc;
  tc.epochs = std::stoi(get("epochs", "1000"));
  tc.steps_per_epoch = std::stoi(get("steps_per_epoch", "50"));
  tc.base_lr = std::stod(get("base_lr", "5e-4"));
  tc.beta1 = std::stod(get("beta1", "0.9"));
  tc.beta2 = std::stod(get("beta2", "0.9"));
  tc.weight_decay = std::stod(get("weight_decay", "0"));
  tc.batch_size = std::stoi(get("batch_size", "0"));
  tc.patch_size = std::stoi(get("patch_size", "32"));
  tc.seed = std::stoull(get("seed", "0"));
  tc.loss = get("loss", "l1") == "charbonnier" ? LossKind::kCharbonnier : LossKind::kL1;
  tc.charbonnier_eps = std::stod(get("charbonnier_eps", "1e-6"));
  tc.augment = get("augment", "0") == "1";
  tc.stop_at_loss = std::stod(get("stop_at_loss", "0"));
  tc.checkpoint_interval = std::stoi(get("checkpoint_interval", "50"));
  {
    tc.lr_halving_epochs.clear();
    std::string spec = get("lr_halving_epochs", "300,600,900");
    size_t pos = 0;
    while (pos < spec.size()) {
      const size_t comma = spec.find(',', pos);
      const std::string tok = spec.substr(pos, comma == std::string::npos ? spec.npos : comma - pos);
      if (!tok.empty()) tc.lr_halving_epochs.push_back(std::stoi(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }

  fs::create_directories(out_dir);
  tc.checkpoint_dir = out_dir;

  std::vector<ImagePair> dataset;
  for (const std::string& path : list_images(data_dir)) {
    dataset.push_back(synthesize_pair(read_image(path), mc.upscale));
  }
  if (dataset.empty()) {
    std::cerr << "no .ppm/.pgm images in " << data_dir << "\n";
    return 1;
  }
  std::cout << "training on " << dataset.size() << " pair(s), scale x" << mc.upscale
            << ", " << tc.epochs << " epochs x " << tc.steps_per_epoch << " steps\n";

  SwinOirModel model(mc, tc.seed);
  std::cout << "parameters: " << model.parameter_count() << "\n";
  const TrainReport report = train(model, dataset, tc);

  std::ofstream log(fs::path(out_dir) / "metrics.jsonl");
  std::ofstream series(fs::path(out_dir) / "series.csv");
  series << "epoch,lr,loss,val_psnr\n";
  for (const EpochStats& e : report.epochs) {
    log << "{\"epoch\": " << e.epoch << ", \"lr\": " << e.lr
        << ", \"loss\": " << e.mean_loss << ", \"val_psnr\": " << e.val_psnr << "}\n";
    series << e.epoch << "," << e.lr << "," << e.mean_loss << "," << e.val_psnr << "\n";
    std::cout << "epoch " << e.epoch << "  lr " << e.lr << "  loss " << e.mean_loss
              << "  val-psnr " << e.val_psnr << "\n";
  }
  const std::string final_path = (fs::path(out_dir) / "model.ckpt").string();
  save_checkpoint(model, final_path);
  std::cout << "final checkpoint: " << final_path << "\n";
  return 0;
}

int run_pipeline(const std::string& image_path, const std::string& detections_path,
                 const std::string& checkpoint_path, const std::string& out_dir,
                 double confidence, int margin) {
  const Image image = read_image(image_path);
  std::vector<DetectionBox> boxes =
      load_detections(detections_path, image.width, image.height, confidence);
  if (margin > 0) {
    for (DetectionBox& box : boxes) {
      const int x0 = std::max(box.x - margin, 0);
      const int y0 = std::max(box.y - margin, 0);
      const int x1 = std::min(box.x + box.width + margin, image.width);
      const int y1 = std::min(box.y + box.height + margin, image.height);
      box.x = x0;
      box.y = y0;
      box.width = x1 - x0;
      box.height = y1 - y0;
    }
  }
  if (boxes.empty()) {
    std::cerr << "warning: no detections above confidence " << confidence
              << "; nothing to enhance\n";
  }
  fs::create_directories(out_dir);
  const PipelineReport report = enhance_crops(image, boxes, checkpoint_path, out_dir);
  const std::string report_path = (fs::path(out_dir) / "report.json").string();
  std::ofstream out(report_path);
  out << report.to_json() << "\n";
  int failures = 0;
  for (const PipelineRecord& rec : report.records) {
    if (rec.ok) {
      std::cout << "box " << rec.index << " (" << rec.label << "): " << rec.enhanced_file
                << " " << rec.output_width << "x" << rec.output_height << "\n";
    } else {
      ++failures;
      std::cerr << "box " << rec.index << " (" << rec.label << ") failed: " << rec.error
                << "\n";
    }
  }
  std::cout << "report: " << report_path << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swinoir: windowed-attention super-resolution with interval dense connections"};
  app.require_subcommand(1);

  auto* topo_cmd = app.add_subcommand("topology", "Print block connection sources");
  int blocks = 4;
  std::string strategy = "interval-dense";
  std::string dot_path;
  topo_cmd->add_option("-m,--blocks", blocks, "Number of blocks")->check(CLI::PositiveNumber);
  topo_cmd->add_option("-s,--strategy", strategy, "interval-dense or skip");
  topo_cmd->add_option("--dot", dot_path, "Write a graphviz file");

  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM over a directory of image pairs");
  std::string restored_dir, reference_dir, mode = "luminance", window = "uniform", csv_path;
  int shave = 0;
  eval_cmd->add_option("--restored", restored_dir, "Directory of restored images")->required();
  eval_cmd->add_option("--reference", reference_dir, "Directory of ground-truth images")->required();
  eval_cmd->add_option("--mode", mode, "luminance or rgb");
  eval_cmd->add_option("--shave", shave, "Border pixels to crop before measuring");
  eval_cmd->add_option("--window", window, "SSIM window: uniform or gaussian");
  eval_cmd->add_option("--csv", csv_path, "Write per-image rows to a CSV file");

  auto* train_cmd = app.add_subcommand("train", "Train a model on a directory of images");
  std::string config_path, data_dir, out_dir = "train_out";
  train_cmd->add_option("-c,--config", config_path, "key = value config file")->required();
  train_cmd->add_option("-d,--data", data_dir, "Directory of training images")->required();
  train_cmd->add_option("-o,--out", out_dir, "Output directory");

  auto* pipe_cmd = app.add_subcommand("pipeline", "Crop detected objects and super-resolve them");
  std::string image_path, detections_path, checkpoint_path, pipe_out = "pipeline_out";
  double confidence = 0.25;
  int margin = 0;
  pipe_cmd->add_option("-i,--image", image_path, "Input image")->required();
  pipe_cmd->add_option("-b,--detections", detections_path, "Detection JSON file")->required();
  pipe_cmd->add_option("-k,--checkpoint", checkpoint_path, "Model checkpoint")->required();
  pipe_cmd->add_option("-o,--out", pipe_out, "Output directory");
  pipe_cmd->add_option("--confidence", confidence, "Minimum confidence");
  pipe_cmd->add_option("--margin", margin, "Context pixels added around each box");

  CLI11_PARSE(app, argc, argv);

  try {
    if (topo_cmd->parsed()) return run_topology(blocks, strategy, dot_path);
    if (eval_cmd->parsed()) return run_eval(restored_dir, reference_dir, mode, shave, window, csv_path);
    if (train_cmd->parsed()) return run_train(config_path, data_dir, out_dir);
    if (pipe_cmd->parsed())
      return run_pipeline(image_path, detections_path, checkpoint_path, pipe_out, confidence, margin);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
