#include "swinoir/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "swinoir/checkpoint.hpp"
#include "swinoir/enhance.hpp"

namespace swinoir {

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

}  // namespace

std::vector<DetectionBox> load_detections(const std::string& path, int image_width,
                                          int image_height, double min_confidence) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detections file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_array()) {
    throw std::runtime_error(path + ": expected a JSON array of detection records");
  }
  std::vector<DetectionBox> boxes;
  for (size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    const std::string where = path + ": record " + std::to_string(i);
    DetectionBox box;
    try {
      box.label = rec.at("label").get<std::string>();
      box.confidence = rec.at("confidence").get<double>();
      const auto& r = rec.at("box");
      if (!r.is_array() || r.size() != 4) {
        throw std::runtime_error("box must be [x, y, width, height]");
      }
      box.x = static_cast<int>(std::llround(r[0].get<double>()));
      box.y = static_cast<int>(std::llround(r[1].get<double>()));
      box.width = static_cast<int>(std::llround(r[2].get<double>()));
      box.height = static_cast<int>(std::llround(r[3].get<double>()));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    if (box.confidence < 0.0 || box.confidence > 1.0) {
      throw std::runtime_error(where + ": confidence " + std::to_string(box.confidence) +
                               " outside [0, 1]");
    }
    if (box.width <= 0 || box.height <= 0) {
      throw std::runtime_error(where + ": box size must be positive");
    }
    // Clip to the image; an empty intersection violates the box contract.
    const int x0 = std::max(box.x, 0);
    const int y0 = std::max(box.y, 0);
    const int x1 = std::min(box.x + box.width, image_width);
    const int y1 = std::min(box.y + box.height, image_height);
    if (x0 >= x1 || y0 >= y1) {
      throw std::runtime_error(where + ": box does not intersect the image");
    }
    box.clipped = x0 != box.x || y0 != box.y || x1 != box.x + box.width ||
                  y1 != box.y + box.height;
    box.x = x0;
    box.y = y0;
    box.width = x1 - x0;
    box.height = y1 - y0;
    if (box.confidence >= min_confidence) boxes.push_back(std::move(box));
  }
  return boxes;
}

Image crop(const Image& image, const DetectionBox& box) {
  return crop_image(image, box.y, box.x, box.height, box.width);
}

PipelineReport enhance_crops(const Image& image, const std::vector<DetectionBox>& boxes,
                             const std::string& checkpoint_path,
                             const std::string& out_dir) {
  PipelineReport report;
  report.checkpoint_path = checkpoint_path;

  auto t0 = std::chrono::steady_clock::now();
  const SwinOirModel model = load_checkpoint(checkpoint_path);
  report.checkpoint_digest = swinoir::checkpoint_digest(checkpoint_path);
  report.scale = model.config().upscale;
  report.load_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  for (size_t i = 0; i < boxes.size(); ++i) {
    PipelineRecord rec;
    rec.index = static_cast<int>(i);
    rec.label = boxes[i].label;
    rec.confidence = boxes[i].confidence;
    rec.box = boxes[i];
    try {
      const Image cropped = crop(image, boxes[i]);
      const Image enhanced = quantize_8bit(upscale_image(model, cropped));
      rec.crop_file = out_dir + "/crop_" + std::to_string(i) + ".ppm";
      rec.enhanced_file = out_dir + "/enhanced_" + std::to_string(i) + ".ppm";
      write_image(cropped, rec.crop_file);
      write_image(enhanced, rec.enhanced_file);
      rec.output_width = enhanced.width;
      rec.output_height = enhanced.height;
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    report.records.push_back(std::move(rec));
  }
  report.enhance_ms = ms_since(t0);
  return report;
}

std::string PipelineReport::to_json() const {
  nlohmann::json j;
  j["checkpoint"] = {{"path", checkpoint_path},
                     {"digest", checkpoint_digest},
                     {"scale", scale}};
  j["timing_ms"] = {{"load", load_ms}, {"enhance", enhance_ms}};
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    recs.push_back({{"index", r.index},
                    {"label", r.label},
                    {"confidence", r.confidence},
                    {"box", {r.box.x, r.box.y, r.box.width, r.box.height}},
                    {"clipped", r.box.clipped},
                    {"crop_file", r.crop_file},
                    {"enhanced_file", r.enhanced_file},
                    {"output_width", r.output_width},
                    {"output_height", r.output_height},
                    {"ok", r.ok},
                    {"error", r.error}});
  }
  j["records"] = std::move(recs);
  return j.dump(2);
}

}  // namespace swinoir
