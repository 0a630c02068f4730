#pragma once

#include <memory>
#include <opencv2/core.hpp>

#include "sdnet/preprocess/box.hpp"

namespace sdnet::preprocess {

SDNET_DEFINE_ERROR(BackendFailure);

/// Pluggable lung segmentation. Implementations declare an identity string
/// that is recorded in run metadata, and return a per-pixel probability map in
/// [0, 1] with the source image's dimensions. Backends are assumed
/// one-per-worker unless documented otherwise by the provider.
class SegmentationBackend {
 public:
  virtual ~SegmentationBackend() = default;
  virtual std::string identity() const = 0;
  virtual cv::Mat predict(const cv::Mat& image, const std::string& id) = 0;
};

/// Marks the whole image as lung; the no-op backend used in tests and as the
/// crop fallback reference.
class FullImageBackend final : public SegmentationBackend {
 public:
  std::string identity() const override { return "full_image/1"; }
  cv::Mat predict(const cv::Mat& image, const std::string& id) override;
};

/// Reads precomputed probability maps produced by an external pretrained
/// segmentation model: <dir>/<id>.png, 8-bit grayscale, value/255 = probability.
class MaskDirBackend final : public SegmentationBackend {
 public:
  explicit MaskDirBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string identity() const override { return "mask_dir/1:" + dir_.filename().string(); }
  cv::Mat predict(const cv::Mat& image, const std::string& id) override;

 private:
  std::filesystem::path dir_;
};

struct BackendSpec {
  std::string kind = "full_image";  // full_image | mask_dir
  std::string mask_dir;
};

std::unique_ptr<SegmentationBackend> make_backend(const BackendSpec& spec);

/// Thresholds the backend's probability map at `threshold` (>= rule).
/// Throws BackendFailure when the backend raises or returns a wrong shape.
LungMask segment_lungs(const cv::Mat& image, SegmentationBackend& backend,
                       const std::string& id, double threshold = 0.5);

}  // namespace sdnet::preprocess
