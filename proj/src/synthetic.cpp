#include "sdnet/synthetic.hpp"

#include <opencv2/imgcodecs.hpp>

#include "sdnet/util/csv.hpp"
#include "sdnet/util/rng.hpp"

namespace sdnet {

namespace {

void add_blob(cv::Mat& img, double cx, double cy, double sigma_x, double sigma_y,
              double amplitude) {
  for (int y = 0; y < img.rows; ++y) {
    double* row = img.ptr<double>(y);
    for (int x = 0; x < img.cols; ++x) {
      const double dx = (x - cx) / sigma_x;
      const double dy = (y - cy) / sigma_y;
      row[x] += amplitude * std::exp(-0.5 * (dx * dx + dy * dy));
    }
  }
}

cv::Mat render(int side, util::Rng& rng, dataset::SeverityLevel severity) {
  cv::Mat img(side, side, CV_64F);
  // Shared background: soft vertical gradient plus pixel noise.
  for (int y = 0; y < side; ++y) {
    double* row = img.ptr<double>(y);
    const double gradient = 20.0 * y / side;
    for (int x = 0; x < side; ++x) row[x] = 95.0 + gradient + 8.0 * rng.normal();
  }

  double amplitude = 0;
  switch (severity) {
    case dataset::SeverityLevel::Mild: amplitude = 55; break;
    case dataset::SeverityLevel::Moderate: amplitude = 85; break;
    case dataset::SeverityLevel::Severe: amplitude = 115; break;
    default: amplitude = 0; break;  // negatives and Normal-PCR+ stay blob-free
  }
  if (amplitude > 0) {
    const double s = side;
    const double sigma = 0.11 * s;
    add_blob(img, s * (0.30 + 0.05 * rng.uniform()), s * (0.40 + 0.06 * rng.uniform()),
             sigma, 1.25 * sigma, amplitude);
    add_blob(img, s * (0.68 + 0.05 * rng.uniform()), s * (0.55 + 0.06 * rng.uniform()),
             1.15 * sigma, sigma, amplitude * 0.9);
  }

  cv::Mat out(side, side, CV_8U);
  for (int y = 0; y < side; ++y) {
    const double* src = img.ptr<double>(y);
    unsigned char* dst = out.ptr<unsigned char>(y);
    for (int x = 0; x < side; ++x)
      dst[x] = static_cast<unsigned char>(std::clamp(src[x], 0.0, 255.0));
  }
  return out;
}

struct SeverityPlan {
  dataset::SeverityLevel level;
  dataset::RaleScore rale;
};

SeverityPlan severity_for(int index, int n_positive, int n_normal_pcr) {
  if (index < n_normal_pcr) return {dataset::SeverityLevel::NormalPcrPlus, {0, 0}};
  const int band = (index - n_normal_pcr) % 3;
  if (band == 0) return {dataset::SeverityLevel::Mild, {1, 1}};
  if (band == 1) return {dataset::SeverityLevel::Moderate, {2, 2}};
  (void)n_positive;
  return {dataset::SeverityLevel::Severe, {4, 3}};
}

}  // namespace

dataset::DatasetManifest make_blob_dataset(const std::filesystem::path& dir,
                                           const SyntheticSpec& spec) {
  std::filesystem::create_directories(dir / "images");
  util::Rng rng(spec.seed, 0xb10bull);

  util::CsvTable table;
  table.header = {"id", "path", "label", "severity", "rale_left", "rale_right",
                  "pcr_positive", "view"};

  const int n_normal_pcr =
      static_cast<int>(round_half_up(spec.normal_pcr_fraction * spec.n_positive));
  for (int i = 0; i < spec.n_positive; ++i) {
    const auto plan = severity_for(i, spec.n_positive, n_normal_pcr);
    const std::string id = "p" + std::to_string(i);
    const std::string rel = "images/" + id + ".png";
    cv::imwrite((dir / rel).string(), render(spec.side, rng, plan.level));
    table.rows.push_back({id, rel, "P", dataset::to_string(plan.level),
                          std::to_string(plan.rale.left_lung),
                          std::to_string(plan.rale.right_lung), "true", "PA"});
  }
  for (int i = 0; i < spec.n_negative; ++i) {
    const std::string id = "n" + std::to_string(i);
    const std::string rel = "images/" + id + ".png";
    cv::imwrite((dir / rel).string(),
                render(spec.side, rng, dataset::SeverityLevel::NegativeControl));
    table.rows.push_back({id, rel, "N", "", "", "", "false", "PA"});
  }

  util::write_csv(dir / "manifest.csv", table);
  return dataset::load_manifest(dir / "manifest.csv");
}

}  // namespace sdnet
