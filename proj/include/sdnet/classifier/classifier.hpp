#pragma once

#include <filesystem>

#include "sdnet/cit/classes4.hpp"
#include "sdnet/nn/models.hpp"
#include "sdnet/preprocess/image_ops.hpp"
#include "sdnet/util/rng.hpp"

namespace sdnet::classifier {

SDNET_DEFINE_ERROR(NonFiniteInput);
SDNET_DEFINE_ERROR(LabelArityMismatch);

/// Softmax output plus the pre-activation logits it came from.
struct ProbVector {
  std::vector<double> logits;
  std::vector<double> probs;

  int arity() const { return static_cast<int>(probs.size()); }
};

/// Numerically stable softmax (max subtraction). Throws NonFiniteInput.
ProbVector softmax(const std::vector<double>& logits);

/// Ties break toward the lowest index; deterministic.
int argmax_index(const std::vector<double>& values);

struct AugmentationConfig {
  bool hflip = true;
  bool rotate = true;
  double max_rotate_deg = 5.0;
  bool jitter = true;
  double jitter_frac = 0.10;  // brightness/contrast amplitude

  util::json to_json() const;
  static AugmentationConfig from_json(const util::json& j);
};

struct ClassifierConfig {
  int num_classes = 4;
  std::string backbone = "resnet50";
  int hidden_units = 512;
  int batch_size = 16;
  double lr = 1e-3;
  double momentum = 0.9;
  int max_epochs = 100;
  int patience = 10;
  int plateau_patience = 5;  // step-decay x0.1 of the lr on val-loss plateau
  enum class Monitor { ValLoss, ValAccuracy } monitor = Monitor::ValLoss;
  AugmentationConfig augment;
  std::uint64_t seed = 0;
  /// Optional tensor archive for backbone initialization (transfer weights
  /// converted to this project's format); overlapping names are loaded.
  std::string pretrained_weights;

  util::json to_json() const;
  static ClassifierConfig from_json(const util::json& j);
};

struct LabeledImage {
  std::string id;
  cv::Mat image;
  int label = 0;  // index into class_names
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double val_accuracy = 0;
  double lr = 0;
};

struct TrainedClassifier {
  nn::ClassifierNet net;
  ClassifierConfig config;
  std::vector<std::string> class_names;  // index order, fixed per K
  std::vector<EpochStats> history;
  int best_epoch = -1;
  int pretrained_tensors_loaded = 0;
};

/// Fixed label orders: [N-, N+, P-, P+] for K=4, [N, P] for K=2.
std::vector<std::string> class_names_for(int num_classes);

/// Label-preserving, size-preserving augmentation.
cv::Mat augment(const cv::Mat& image, const AugmentationConfig& config, util::Rng& rng);

/// Fine-tunes all layers; the hidden rectified layer and the K-way head start
/// from fresh initialization. Early-stops on the monitored validation
/// quantity and returns the best checkpoint.
TrainedClassifier train_classifier(const std::vector<LabeledImage>& train,
                                   const std::vector<LabeledImage>& val,
                                   const ClassifierConfig& config,
                                   const preprocess::PrepareSettings& prepare);

struct Prediction {
  ProbVector probs;
  int label_index = 0;
};

/// Deterministic evaluation-mode forward of one prepared image.
Prediction predict(const nn::ClassifierNet& net, const nn::Tensor& prepared);

/// Checkpoint directory: {weights/, meta.json}.
void save_classifier(const std::filesystem::path& dir, TrainedClassifier& clf,
                     const std::string& data_hash);
TrainedClassifier load_classifier(const std::filesystem::path& dir);

}  // namespace sdnet::classifier
