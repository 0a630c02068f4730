#pragma once

#include "sdnet/classifier/classifier.hpp"

namespace sdnet::explain {

SDNET_DEFINE_ERROR(InvalidClass);

struct Heatmap {
  enum class Kind { Decision, Counterfactual };

  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major, in [0,1]
  int target_class = 0;
  Kind kind = Kind::Decision;

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Gradient-weighted class activation map for `target_class`: spatially
/// averaged gradients of the class score weight the last convolutional
/// block's channels; the sum is rectified, bilinearly upsampled to the input
/// size and min-max normalized (an all-zero map stays all-zero).
Heatmap gradcam(const nn::ClassifierNet& model, const nn::Tensor& prepared, int target_class,
                Heatmap::Kind kind = Heatmap::Kind::Decision);

/// The decision map targets the predicted class; the counterfactual map
/// targets the opposite binary outcome (for a four-class model, the
/// higher-probability class of the opposite polarity pair).
std::pair<Heatmap, Heatmap> counterfactual_pair(const nn::ClassifierNet& model,
                                                const nn::Tensor& prepared);

/// Alpha-blends the color-mapped heatmap over the grayscale image.
cv::Mat overlay(const cv::Mat& image, const Heatmap& heatmap,
                const std::string& colormap = "jet", double alpha = 0.4);

/// Writes <id>_explain.png (original | decision | counterfactual) and a JSON
/// sidecar {id, predicted, target_decision, target_counterfactual}.
void write_triptych(const std::filesystem::path& dir, const std::string& id,
                    const cv::Mat& base, const nn::ClassifierNet& model,
                    const nn::Tensor& prepared, const std::vector<std::string>& class_names,
                    const std::string& colormap = "jet", double alpha = 0.4);

}  // namespace sdnet::explain
