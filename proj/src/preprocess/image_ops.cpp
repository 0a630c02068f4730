#include "sdnet/preprocess/image_ops.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace sdnet::preprocess {

cv::Mat load_image(const std::filesystem::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw DegenerateImage("cannot decode image: " + path.string());
  if (img.channels() == 4) {
    cv::Mat bgr;
    cv::cvtColor(img, bgr, cv::COLOR_BGRA2BGR);
    return bgr;
  }
  return img;
}

cv::Mat crop(const cv::Mat& image, const Box& box) {
  if (!box.valid_for(image.cols, image.rows))
    throw BoxOutOfRange("crop box does not fit a " + std::to_string(image.cols) + "x" +
                        std::to_string(image.rows) + " image");
  return image(cv::Rect(box.x0, box.y0, box.width(), box.height())).clone();
}

nn::Tensor prepare_image(const cv::Mat& image, const PrepareSettings& settings) {
  if (image.empty() || image.rows == 0 || image.cols == 0)
    throw DegenerateImage("prepare_image: zero-area input");
  if (image.channels() != 1 && image.channels() != 3)
    throw DegenerateImage("prepare_image: expected 1 or 3 channels, got " +
                          std::to_string(image.channels()));

  cv::Mat resized = image;
  if (image.rows != settings.side || image.cols != settings.side)
    cv::resize(image, resized, cv::Size(settings.side, settings.side), 0, 0, cv::INTER_LINEAR);

  cv::Mat as_float;
  const double scale = resized.depth() == CV_8U ? 1.0 / 255.0
                       : resized.depth() == CV_16U ? 1.0 / 65535.0
                                                   : 1.0;
  resized.convertTo(as_float, CV_64F, scale);

  const int side = settings.side;
  nn::Tensor out({3, side, side});
  if (as_float.channels() == 1) {
    for (int c = 0; c < 3; ++c) {
      const double m = settings.mean[c], s = settings.stddev[c];
      for (int y = 0; y < side; ++y) {
        const double* row = as_float.ptr<double>(y);
        nn::Scalar* dst = out.data() + (static_cast<std::size_t>(c) * side + y) * side;
        for (int x = 0; x < side; ++x) dst[x] = (row[x] - m) / s;
      }
    }
  } else {
    // OpenCV stores BGR; the tensor is RGB so the usual channel statistics apply.
    for (int y = 0; y < side; ++y) {
      const cv::Vec3d* row = as_float.ptr<cv::Vec3d>(y);
      for (int x = 0; x < side; ++x) {
        for (int c = 0; c < 3; ++c) {
          const double v = row[x][2 - c];
          out.data()[(static_cast<std::size_t>(c) * side + y) * side + x] =
              (v - settings.mean[c]) / settings.stddev[c];
        }
      }
    }
  }
  return out;
}

cv::Mat tensor_to_image(const nn::Tensor& chw, const PrepareSettings& settings) {
  if (chw.ndim() != 3 || chw.shape(0) != 3)
    throw nn::ShapeMismatch("tensor_to_image expects [3,H,W], got " + chw.shape_str());
  const int h = chw.shape(1), w = chw.shape(2);
  cv::Mat out(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    cv::Vec3b* row = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = chw[(static_cast<std::size_t>(c) * h + y) * w + x];
        v = v * settings.stddev[c] + settings.mean[c];
        v = std::clamp(v, 0.0, 1.0);
        row[x][2 - c] = static_cast<unsigned char>(round_half_up(v * 255.0));
      }
    }
  }
  return out;
}

CropOutcome segment_and_crop(const cv::Mat& image, SegmentationBackend& backend,
                             const std::string& id, const PreprocessSettings& settings) {
  CropOutcome outcome;
  Box raw;
  try {
    const LungMask mask = segment_lungs(image, backend, id, settings.threshold);
    raw = bounding_box(mask);
  } catch (const EmptyMask&) {
    raw = Box{0, 0, image.cols - 1, image.rows - 1};
    outcome.empty_mask_fallback = true;
  }
  outcome.box =
      expand_and_clamp(raw, settings.margin, image.cols, image.rows, settings.margin_mode);
  outcome.image = crop(image, outcome.box);
  return outcome;
}

}  // namespace sdnet::preprocess
