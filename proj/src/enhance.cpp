#include "swinoir/enhance.hpp"

namespace swinoir {

Image upscale_image(const SwinOirModel& model, const Image& input) {
  const int s = model.config().upscale;
  const Image padded = pad_to_multiple(input, model.config().window);
  const Tensor out = model.forward(image_to_tensor(padded));
  Image result = tensor_to_image(out);
  if (result.height != input.height * s || result.width != input.width * s) {
    result = crop_image(result, 0, 0, input.height * s, input.width * s);
  }
  return clamp_image(result);
}

}  // namespace swinoir
