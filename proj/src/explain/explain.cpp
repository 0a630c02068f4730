#include "sdnet/explain/explain.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace sdnet::explain {

Heatmap gradcam(const nn::ClassifierNet& model, const nn::Tensor& prepared, int target_class,
                Heatmap::Kind kind) {
  if (prepared.ndim() != 3)
    throw nn::ShapeMismatch("gradcam expects a [C,H,W] tensor, got " + prepared.shape_str());
  const int in_h = prepared.shape(1), in_w = prepared.shape(2);

  nn::Var x = nn::make_leaf(prepared.reshaped({1, prepared.shape(0), in_h, in_w}));
  nn::Var cam;
  nn::Var logits = model.forward(x, /*training=*/false, &cam);
  const int k = logits->value.shape(1);
  if (target_class < 0 || target_class >= k)
    throw InvalidClass("target class " + std::to_string(target_class) + " outside [0," +
                       std::to_string(k) + ")");

  nn::backward(nn::index_scalar(logits, static_cast<std::size_t>(target_class)));

  const int channels = cam->value.shape(1);
  const int map_h = cam->value.shape(2), map_w = cam->value.shape(3);
  const std::size_t plane = static_cast<std::size_t>(map_h) * map_w;

  cv::Mat raw(map_h, map_w, CV_64F, 0.0);
  const bool have_grad = !cam->grad.empty();
  for (int c = 0; c < channels && have_grad; ++c) {
    const nn::Scalar* g = cam->grad.data() + cam->grad.at4(0, c, 0, 0);
    const nn::Scalar* a = cam->value.data() + cam->value.at4(0, c, 0, 0);
    double alpha = 0;
    for (std::size_t i = 0; i < plane; ++i) alpha += g[i];
    alpha /= static_cast<double>(plane);
    for (int y = 0; y < map_h; ++y)
      for (int xw = 0; xw < map_w; ++xw)
        raw.at<double>(y, xw) += alpha * a[static_cast<std::size_t>(y) * map_w + xw];
  }
  cv::max(raw, 0.0, raw);  // rectify

  cv::Mat upsampled;
  cv::resize(raw, upsampled, cv::Size(in_w, in_h), 0, 0, cv::INTER_LINEAR);

  double lo, hi;
  cv::minMaxLoc(upsampled, &lo, &hi);
  Heatmap heat;
  heat.width = in_w;
  heat.height = in_h;
  heat.target_class = target_class;
  heat.kind = kind;
  heat.values.resize(static_cast<std::size_t>(in_w) * in_h, 0.0);
  if (hi > lo) {
    for (int y = 0; y < in_h; ++y)
      for (int xw = 0; xw < in_w; ++xw)
        heat.values[static_cast<std::size_t>(y) * in_w + xw] =
            (upsampled.at<double>(y, xw) - lo) / (hi - lo);
  }
  // A constant map (hi == lo) carries no localization signal; it stays zero.
  return heat;
}

std::pair<Heatmap, Heatmap> counterfactual_pair(const nn::ClassifierNet& model,
                                                const nn::Tensor& prepared) {
  const auto pred = classifier::predict(model, prepared);
  const int k = pred.probs.arity();
  const int predicted = pred.label_index;

  int counter;
  if (k == 4) {
    // Opposite polarity pair, explained via its higher-probability class.
    const bool predicted_positive = cit::is_positive_class(static_cast<cit::Class4>(predicted));
    const int a = predicted_positive ? 0 : 2;  // [N-,N+] or [P-,P+]
    counter = pred.probs.probs[a] >= pred.probs.probs[a + 1] ? a : a + 1;
  } else if (k == 2) {
    counter = 1 - predicted;
  } else {
    throw InvalidClass("counterfactual_pair supports K in {2,4}, got K=" + std::to_string(k));
  }

  return {gradcam(model, prepared, predicted, Heatmap::Kind::Decision),
          gradcam(model, prepared, counter, Heatmap::Kind::Counterfactual)};
}

namespace {

int colormap_id(const std::string& name) {
  if (name == "jet") return cv::COLORMAP_JET;
  if (name == "turbo") return cv::COLORMAP_TURBO;
  if (name == "hot") return cv::COLORMAP_HOT;
  if (name == "viridis") return cv::COLORMAP_VIRIDIS;
  if (name == "bone") return cv::COLORMAP_BONE;
  throw ConfigError("unknown colormap '" + name + "'");
}

cv::Mat to_gray_bgr(const cv::Mat& image) {
  cv::Mat gray;
  if (image.channels() == 3) cv::cvtColor(image, gray, cv::COLOR_BGR2GRAY);
  else gray = image;
  if (gray.depth() != CV_8U) {
    cv::Mat tmp;
    gray.convertTo(tmp, CV_8U, gray.depth() == CV_16U ? 1.0 / 257.0 : 255.0);
    gray = tmp;
  }
  cv::Mat bgr;
  cv::cvtColor(gray, bgr, cv::COLOR_GRAY2BGR);
  return bgr;
}

}  // namespace

cv::Mat overlay(const cv::Mat& image, const Heatmap& heatmap, const std::string& colormap,
                double alpha) {
  if (image.cols != heatmap.width || image.rows != heatmap.height)
    throw nn::ShapeMismatch("overlay: image is " + std::to_string(image.cols) + "x" +
                            std::to_string(image.rows) + ", heatmap " +
                            std::to_string(heatmap.width) + "x" +
                            std::to_string(heatmap.height));

  cv::Mat heat8(heatmap.height, heatmap.width, CV_8U);
  for (int y = 0; y < heatmap.height; ++y)
    for (int x = 0; x < heatmap.width; ++x)
      heat8.at<unsigned char>(y, x) =
          static_cast<unsigned char>(round_half_up(255.0 * heatmap.at(y, x)));
  cv::Mat colored;
  cv::applyColorMap(heat8, colored, colormap_id(colormap));

  cv::Mat base = to_gray_bgr(image);
  cv::Mat out;
  cv::addWeighted(base, 1.0 - alpha, colored, alpha, 0.0, out);
  return out;
}

void write_triptych(const std::filesystem::path& dir, const std::string& id,
                    const cv::Mat& base, const nn::ClassifierNet& model,
                    const nn::Tensor& prepared, const std::vector<std::string>& class_names,
                    const std::string& colormap, double alpha) {
  std::filesystem::create_directories(dir);
  const auto [decision, counterfactual] = counterfactual_pair(model, prepared);

  cv::Mat panel_base = to_gray_bgr(base);
  if (panel_base.cols != decision.width || panel_base.rows != decision.height)
    cv::resize(panel_base, panel_base, cv::Size(decision.width, decision.height), 0, 0,
               cv::INTER_LINEAR);

  cv::Mat strip;
  std::vector<cv::Mat> panels{panel_base, overlay(panel_base, decision, colormap, alpha),
                              overlay(panel_base, counterfactual, colormap, alpha)};
  cv::hconcat(panels, strip);
  cv::imwrite((dir / (id + "_explain.png")).string(), strip);

  const auto pred = classifier::predict(model, prepared);
  util::json sidecar{{"id", id},
                     {"predicted", class_names.at(pred.label_index)},
                     {"target_decision", class_names.at(decision.target_class)},
                     {"target_counterfactual", class_names.at(counterfactual.target_class)}};
  util::write_json(dir / (id + "_explain.json"), sidecar);
}

}  // namespace sdnet::explain
