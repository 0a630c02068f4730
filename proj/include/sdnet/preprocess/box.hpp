#pragma once

#include <cstdint>
#include <vector>

#include "sdnet/common.hpp"
#include "sdnet/util/jsonio.hpp"

namespace sdnet::preprocess {

SDNET_DEFINE_ERROR(EmptyMask);
SDNET_DEFINE_ERROR(BoxOutOfRange);

/// Inclusive pixel rectangle: 0 <= x0 <= x1 < width, 0 <= y0 <= y1 < height.
struct Box {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool valid_for(int image_w, int image_h) const {
    return 0 <= x0 && x0 <= x1 && x1 < image_w && 0 <= y0 && y0 <= y1 && y1 < image_h;
  }
  bool contains(const Box& other) const {
    return x0 <= other.x0 && y0 <= other.y0 && x1 >= other.x1 && y1 >= other.y1;
  }
  bool operator==(const Box&) const = default;

  util::json to_json() const { return {{"x0", x0}, {"y0", y0}, {"x1", x1}, {"y1", y1}}; }
  static Box from_json(const util::json& j) {
    return Box{j.at("x0").get<int>(), j.at("y0").get<int>(), j.at("x1").get<int>(),
               j.at("y1").get<int>()};
  }
};

/// Binary lung membership, same dimensions as the source image.
struct LungMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major, values 0/1

  std::size_t set_count() const {
    std::size_t n = 0;
    for (auto v : data) n += v;
    return n;
  }
};

/// Tightest box containing every set pixel. Throws EmptyMask when none is set.
Box bounding_box(const LungMask& mask);

enum class MarginMode { BoxRelative, ImageRelative };

/// Grows the box by round_half_up(margin * extent) on each side and clamps to
/// the image. The extent is the box's own width/height (default) or the
/// image's, depending on `mode`.
Box expand_and_clamp(const Box& box, double margin, int image_w, int image_h,
                     MarginMode mode = MarginMode::BoxRelative);

}  // namespace sdnet::preprocess
