#pragma once

#include <array>
#include <opencv2/core.hpp>

#include "sdnet/nn/tensor.hpp"
#include "sdnet/preprocess/segmentation.hpp"

namespace sdnet::preprocess {

SDNET_DEFINE_ERROR(DegenerateImage);

/// Reads PNG/JPEG unchanged (grayscale stays single-channel).
cv::Mat load_image(const std::filesystem::path& path);

/// Copies the inclusive box; output is (x1-x0+1) x (y1-y0+1).
cv::Mat crop(const cv::Mat& image, const Box& box);

struct PrepareSettings {
  int side = 224;
  // Channel statistics of the backbone's pretraining corpus, RGB order.
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> stddev{0.229, 0.224, 0.225};
};

/// Bilinear resize to side x side (skipped when already that size), grayscale
/// replicated to 3 channels, scaled to [0,1], then per-channel normalization.
/// Returns a [3, side, side] tensor in RGB channel order.
nn::Tensor prepare_image(const cv::Mat& image, const PrepareSettings& settings);

/// Inverse of prepare_image's normalization for writing generator outputs:
/// de-normalizes, clamps to [0,1] and returns an 8-bit BGR image.
cv::Mat tensor_to_image(const nn::Tensor& chw, const PrepareSettings& settings);

struct PreprocessSettings {
  double threshold = 0.5;
  double margin = 0.025;
  MarginMode margin_mode = MarginMode::BoxRelative;
};

struct CropOutcome {
  Box box;
  bool empty_mask_fallback = false;
  cv::Mat image;
};

/// Segment, take the bounding box, expand by the margin and crop. An empty
/// mask falls back to the full-image box with the fallback flag set, so a
/// degenerate segmentation never aborts the pipeline.
CropOutcome segment_and_crop(const cv::Mat& image, SegmentationBackend& backend,
                             const std::string& id, const PreprocessSettings& settings);

}  // namespace sdnet::preprocess
