#include "sdnet/preprocess/segmentation.hpp"

#include <opencv2/imgcodecs.hpp>

namespace sdnet::preprocess {

cv::Mat FullImageBackend::predict(const cv::Mat& image, const std::string&) {
  return cv::Mat(image.rows, image.cols, CV_64F, 1.0);
}

cv::Mat MaskDirBackend::predict(const cv::Mat& image, const std::string& id) {
  const auto path = dir_ / (id + ".png");
  cv::Mat mask = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (mask.empty()) throw BackendFailure("mask_dir backend: cannot read " + path.string());
  if (mask.rows != image.rows || mask.cols != image.cols)
    throw BackendFailure("mask_dir backend: mask " + path.string() + " is " +
                         std::to_string(mask.cols) + "x" + std::to_string(mask.rows) +
                         ", image is " + std::to_string(image.cols) + "x" +
                         std::to_string(image.rows));
  cv::Mat prob;
  mask.convertTo(prob, CV_64F, 1.0 / 255.0);
  return prob;
}

std::unique_ptr<SegmentationBackend> make_backend(const BackendSpec& spec) {
  if (spec.kind == "full_image") return std::make_unique<FullImageBackend>();
  if (spec.kind == "mask_dir") {
    if (spec.mask_dir.empty()) throw ConfigError("mask_dir backend needs a directory");
    return std::make_unique<MaskDirBackend>(spec.mask_dir);
  }
  throw ConfigError("unknown segmentation backend '" + spec.kind + "'");
}

LungMask segment_lungs(const cv::Mat& image, SegmentationBackend& backend,
                       const std::string& id, double threshold) {
  cv::Mat prob;
  try {
    prob = backend.predict(image, id);
  } catch (const BackendFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendFailure(std::string("segmentation backend raised: ") + e.what());
  }
  if (prob.empty() || prob.rows != image.rows || prob.cols != image.cols ||
      prob.channels() != 1)
    throw BackendFailure("segmentation backend returned a map with the wrong shape");
  if (prob.type() != CV_64F) {
    cv::Mat tmp;
    prob.convertTo(tmp, CV_64F);
    prob = tmp;
  }

  LungMask mask;
  mask.width = image.cols;
  mask.height = image.rows;
  mask.data.resize(static_cast<std::size_t>(image.cols) * image.rows);
  for (int y = 0; y < prob.rows; ++y) {
    const double* row = prob.ptr<double>(y);
    for (int x = 0; x < prob.cols; ++x) {
      const double p = row[x];
      if (p < 0.0 || p > 1.0 || !std::isfinite(p))
        throw BackendFailure("segmentation probability outside [0,1]");
      mask.data[static_cast<std::size_t>(y) * mask.width + x] = p >= threshold ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace sdnet::preprocess
