#include "sdnet/preprocess/box.hpp"

#include <algorithm>

namespace sdnet::preprocess {

Box bounding_box(const LungMask& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    const std::uint8_t* row = mask.data.data() + static_cast<std::size_t>(y) * mask.width;
    for (int x = 0; x < mask.width; ++x) {
      if (!row[x]) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw EmptyMask("segmentation mask has no set pixels");
  return Box{x0, y0, x1, y1};
}

Box expand_and_clamp(const Box& box, double margin, int image_w, int image_h, MarginMode mode) {
  if (!box.valid_for(image_w, image_h))
    throw BoxOutOfRange("box does not fit a " + std::to_string(image_w) + "x" +
                        std::to_string(image_h) + " image");
  if (margin < 0) throw Error("margin must be non-negative");
  const int ref_w = mode == MarginMode::BoxRelative ? box.width() : image_w;
  const int ref_h = mode == MarginMode::BoxRelative ? box.height() : image_h;
  const int dx = static_cast<int>(round_half_up(margin * ref_w));
  const int dy = static_cast<int>(round_half_up(margin * ref_h));
  Box out;
  out.x0 = std::max(0, box.x0 - dx);
  out.y0 = std::max(0, box.y0 - dy);
  out.x1 = std::min(image_w - 1, box.x1 + dx);
  out.y1 = std::min(image_h - 1, box.y1 + dy);
  return out;
}

}  // namespace sdnet::preprocess
