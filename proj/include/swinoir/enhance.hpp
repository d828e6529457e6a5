#pragma once

#include "swinoir/image.hpp"
#include "swinoir/model.hpp"

namespace swinoir {

// Full inference path for one image: mirror-pad to a window multiple, run the
// model without recording gradients, crop to (H*s, W*s) and clamp to [0, 1].
Image upscale_image(const SwinOirModel& model, const Image& input);

}  // namespace swinoir
