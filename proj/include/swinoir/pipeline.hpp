#pragma once

#include <string>
#include <vector>

#include "swinoir/image.hpp"

namespace swinoir {

// One detector output record, consumed as data: the detector itself lives
// outside this pipeline.
struct DetectionBox {
  std::string label;
  double confidence = 0.0;
  int x = 0, y = 0;  // top-left, source-image pixels
  int width = 0, height = 0;
  bool clipped = false;  // true when the raw rect extended past the image
};

struct PipelineRecord {
  int index = 0;
  std::string label;
  double confidence = 0.0;
  DetectionBox box;
  std::string crop_file;
  std::string enhanced_file;
  int output_width = 0;
  int output_height = 0;
  bool ok = false;
  std::string error;
};

struct PipelineReport {
  std::string checkpoint_path;
  std::string checkpoint_digest;
  int scale = 0;
  double load_ms = 0.0;
  double enhance_ms = 0.0;
  std::vector<PipelineRecord> records;

  std::string to_json() const;
};

// Parses a JSON array of {"label", "confidence", "box": [x, y, w, h]}
// records. Boxes are validated (confidence in [0, 1], positive size,
// non-empty intersection with the image), clipped to the image bounds and
// filtered by min_confidence. Malformed records raise with their index.
std::vector<DetectionBox> load_detections(const std::string& path, int image_width,
                                          int image_height,
                                          double min_confidence = 0.25);

// Pixel-exact sub-image of the box rect.
Image crop(const Image& image, const DetectionBox& box);

// Crops every box, super-resolves each crop with the checkpointed model and
// writes both the crop and the enhanced result under out_dir. A failing crop
// is recorded and does not abort the remaining ones.
PipelineReport enhance_crops(const Image& image, const std::vector<DetectionBox>& boxes,
                             const std::string& checkpoint_path,
                             const std::string& out_dir);

}  // namespace swinoir
