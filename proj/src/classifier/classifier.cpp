#include "sdnet/classifier/classifier.hpp"

#include <opencv2/imgproc.hpp>

#include "sdnet/nn/optim.hpp"
#include "sdnet/nn/serialize.hpp"

namespace sdnet::classifier {

ProbVector softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw NonFiniteInput("softmax on empty logits");
  for (double v : logits)
    if (!std::isfinite(v)) throw NonFiniteInput("softmax input is not finite");
  ProbVector out;
  out.logits = logits;
  out.probs.resize(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - mx);
    sum += out.probs[i];
  }
  for (double& p : out.probs) p /= sum;
  return out;
}

int argmax_index(const std::vector<double>& values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

util::json AugmentationConfig::to_json() const {
  return {{"hflip", hflip},
          {"rotate", rotate},
          {"max_rotate_deg", max_rotate_deg},
          {"jitter", jitter},
          {"jitter_frac", jitter_frac}};
}

AugmentationConfig AugmentationConfig::from_json(const util::json& j) {
  AugmentationConfig a;
  a.hflip = j.value("hflip", a.hflip);
  a.rotate = j.value("rotate", a.rotate);
  a.max_rotate_deg = j.value("max_rotate_deg", a.max_rotate_deg);
  a.jitter = j.value("jitter", a.jitter);
  a.jitter_frac = j.value("jitter_frac", a.jitter_frac);
  return a;
}

util::json ClassifierConfig::to_json() const {
  return {{"num_classes", num_classes},
          {"backbone", backbone},
          {"hidden_units", hidden_units},
          {"batch_size", batch_size},
          {"lr", lr},
          {"momentum", momentum},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"plateau_patience", plateau_patience},
          {"monitor", monitor == Monitor::ValLoss ? "val_loss" : "val_accuracy"},
          {"augment", augment.to_json()},
          {"seed", seed},
          {"pretrained_weights", pretrained_weights}};
}

ClassifierConfig ClassifierConfig::from_json(const util::json& j) {
  ClassifierConfig c;
  c.num_classes = j.value("num_classes", c.num_classes);
  c.backbone = j.value("backbone", c.backbone);
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.momentum = j.value("momentum", c.momentum);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
  const std::string mon = j.value("monitor", "val_loss");
  if (mon == "val_loss") c.monitor = Monitor::ValLoss;
  else if (mon == "val_accuracy") c.monitor = Monitor::ValAccuracy;
  else throw ConfigError("unknown monitor '" + mon + "'");
  if (j.contains("augment")) c.augment = AugmentationConfig::from_json(j.at("augment"));
  c.seed = j.value("seed", c.seed);
  c.pretrained_weights = j.value("pretrained_weights", c.pretrained_weights);
  return c;
}

std::vector<std::string> class_names_for(int num_classes) {
  if (num_classes == 2) return {"N", "P"};
  if (num_classes == 4) return {"N-", "N+", "P-", "P+"};
  throw LabelArityMismatch("num_classes must be 2 or 4, got " + std::to_string(num_classes));
}

cv::Mat augment(const cv::Mat& image, const AugmentationConfig& config, util::Rng& rng) {
  cv::Mat out = image;
  if (config.hflip && rng.bernoulli(0.5)) {
    cv::Mat flipped;
    cv::flip(out, flipped, 1);
    out = flipped;
  }
  if (config.rotate) {
    const double angle = rng.uniform(-config.max_rotate_deg, config.max_rotate_deg);
    const cv::Point2f center(static_cast<float>(out.cols) / 2.f,
                             static_cast<float>(out.rows) / 2.f);
    cv::Mat rot = cv::getRotationMatrix2D(center, angle, 1.0);
    cv::Mat rotated;
    cv::warpAffine(out, rotated, rot, out.size(), cv::INTER_LINEAR, cv::BORDER_REPLICATE);
    out = rotated;
  }
  if (config.jitter) {
    const double contrast = 1.0 + rng.uniform(-config.jitter_frac, config.jitter_frac);
    const double brightness = rng.uniform(-config.jitter_frac, config.jitter_frac);
    cv::Mat jittered;
    const double offset = brightness * (image.depth() == CV_8U ? 255.0 : 1.0);
    out.convertTo(jittered, -1, contrast, offset);
    out = jittered;
  }
  return out;
}

namespace {

struct PreparedSet {
  std::vector<nn::Tensor> images;
  std::vector<int> labels;
};

PreparedSet prepare_set(const std::vector<LabeledImage>& set,
                        const preprocess::PrepareSettings& prep) {
  PreparedSet out;
  out.images.reserve(set.size());
  out.labels.reserve(set.size());
  for (const auto& li : set) {
    out.images.push_back(preprocess::prepare_image(li.image, prep));
    out.labels.push_back(li.label);
  }
  return out;
}

nn::Tensor stack(const std::vector<nn::Tensor>& images, const std::vector<std::size_t>& idx,
                 std::size_t begin, std::size_t end) {
  const auto& first = images[idx[begin]];
  nn::Tensor batch({static_cast<int>(end - begin), first.shape(0), first.shape(1),
                    first.shape(2)});
  const std::size_t stride = first.size();
  for (std::size_t i = begin; i < end; ++i)
    std::copy(images[idx[i]].data(), images[idx[i]].data() + stride,
              batch.data() + (i - begin) * stride);
  return batch;
}

}  // namespace

TrainedClassifier train_classifier(const std::vector<LabeledImage>& train,
                                   const std::vector<LabeledImage>& val,
                                   const ClassifierConfig& config,
                                   const preprocess::PrepareSettings& prepare) {
  if (train.empty() || val.empty())
    throw EmptyDataset("train_classifier needs non-empty train and validation sets");
  const auto names = class_names_for(config.num_classes);
  for (const auto& set : {&train, &val})
    for (const auto& li : *set)
      if (li.label < 0 || li.label >= config.num_classes)
        throw LabelArityMismatch("label index " + std::to_string(li.label) + " for id '" +
                                 li.id + "' does not fit K=" +
                                 std::to_string(config.num_classes));

  util::Rng init_rng(config.seed, 3);
  nn::ClassifierNetConfig net_cfg;
  net_cfg.backbone = nn::ResNetConfig::named(config.backbone);
  net_cfg.hidden_units = config.hidden_units;
  net_cfg.num_classes = config.num_classes;

  TrainedClassifier clf{nn::ClassifierNet(net_cfg, init_rng), config, names, {}, -1, 0};
  auto state = clf.net.state();
  if (!config.pretrained_weights.empty())
    clf.pretrained_tensors_loaded =
        nn::load_state_overlap(config.pretrained_weights, state);

  nn::Sgd sgd(state.param_vars(), config.lr, config.momentum);
  nn::PlateauLr plateau(config.plateau_patience);
  nn::EarlyStopping stopper(config.patience);
  auto best = nn::snapshot(state);

  util::Rng aug_rng(config.seed, 4);
  util::Rng shuffle_rng(config.seed, 5);
  const auto val_prepared = prepare_set(val, prepare);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    // Fresh augmentation draw every epoch.
    PreparedSet train_prepared;
    train_prepared.images.reserve(train.size());
    train_prepared.labels.reserve(train.size());
    for (const auto& li : train) {
      train_prepared.images.push_back(
          preprocess::prepare_image(augment(li.image, config.augment, aug_rng), prepare));
      train_prepared.labels.push_back(li.label);
    }

    shuffle_rng.shuffle(order);
    double train_loss = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      nn::Var x = nn::make_leaf(stack(train_prepared.images, order, begin, end));
      std::vector<int> targets;
      targets.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i)
        targets.push_back(train_prepared.labels[order[i]]);

      sgd.zero_grad();
      nn::Var logits = clf.net.forward(x, /*training=*/true);
      nn::Var loss;
      try {
        loss = nn::softmax_cross_entropy(logits, targets);
      } catch (const nn::NonFiniteLoss& e) {
        throw DivergedTraining(e.what());
      }
      nn::backward(loss);
      sgd.step();
      train_loss += loss->value.item() * static_cast<double>(end - begin);
    }
    train_loss /= static_cast<double>(train.size());

    double val_loss = 0;
    std::size_t correct = 0;
    std::vector<std::size_t> val_order(val.size());
    for (std::size_t i = 0; i < val_order.size(); ++i) val_order[i] = i;
    for (std::size_t begin = 0; begin < val_order.size(); begin += batch_size) {
      const std::size_t end = std::min(val_order.size(), begin + batch_size);
      nn::Var x = nn::make_leaf(stack(val_prepared.images, val_order, begin, end));
      std::vector<int> targets(val_prepared.labels.begin() + begin,
                               val_prepared.labels.begin() + end);
      nn::Var logits = clf.net.forward(x, /*training=*/false);
      val_loss += nn::softmax_cross_entropy(logits, targets)->value.item() *
                  static_cast<double>(end - begin);
      const int k = config.num_classes;
      for (std::size_t i = begin; i < end; ++i) {
        std::vector<double> row(logits->value.data() + (i - begin) * k,
                                logits->value.data() + (i - begin + 1) * k);
        if (argmax_index(row) == targets[i - begin]) ++correct;
      }
    }
    val_loss /= static_cast<double>(val.size());
    const double val_acc = static_cast<double>(correct) / static_cast<double>(val.size());
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw DivergedTraining("loss diverged at epoch " + std::to_string(epoch));

    clf.history.push_back({epoch, train_loss, val_loss, val_acc, sgd.lr()});
    plateau.step(val_loss, sgd);

    const double monitored =
        config.monitor == ClassifierConfig::Monitor::ValLoss ? val_loss : -val_acc;
    if (stopper.update(monitored, epoch)) {
      best = nn::snapshot(state);
      clf.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }

  nn::restore(state, best);
  return clf;
}

Prediction predict(const nn::ClassifierNet& net, const nn::Tensor& prepared) {
  if (prepared.ndim() != 3)
    throw nn::ShapeMismatch("predict expects a [C,H,W] tensor, got " + prepared.shape_str());
  nn::Var x = nn::make_leaf(
      prepared.reshaped({1, prepared.shape(0), prepared.shape(1), prepared.shape(2)}));
  nn::Var logits = net.forward(x, /*training=*/false);
  std::vector<double> row(logits->value.data(), logits->value.data() + logits->value.size());
  Prediction pred;
  pred.probs = softmax(row);
  pred.label_index = argmax_index(pred.probs.probs);
  return pred;
}

void save_classifier(const std::filesystem::path& dir, TrainedClassifier& clf,
                     const std::string& data_hash) {
  std::filesystem::create_directories(dir / "weights");
  auto state = clf.net.state();
  nn::save_state(dir / "weights" / "model.bin", state);
  util::json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["config"] = clf.config.to_json();
  meta["class_names"] = clf.class_names;
  meta["seed"] = clf.config.seed;
  meta["rng"] = util::Rng::kIdentity;
  meta["data_hash"] = data_hash;
  meta["best_epoch"] = clf.best_epoch;
  meta["pretrained_tensors_loaded"] = clf.pretrained_tensors_loaded;
  util::write_json(dir / "meta.json", meta);
}

TrainedClassifier load_classifier(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "meta.json"))
    throw nn::CheckpointMissing("no classifier checkpoint at " + dir.string());
  const auto meta = util::read_json(dir / "meta.json");
  auto config = ClassifierConfig::from_json(meta.at("config"));

  util::Rng rng(0);
  nn::ClassifierNetConfig net_cfg;
  net_cfg.backbone = nn::ResNetConfig::named(config.backbone);
  net_cfg.hidden_units = config.hidden_units;
  net_cfg.num_classes = config.num_classes;
  TrainedClassifier clf{nn::ClassifierNet(net_cfg, rng),
                        config,
                        meta.at("class_names").get<std::vector<std::string>>(),
                        {},
                        meta.value("best_epoch", -1),
                        meta.value("pretrained_tensors_loaded", 0)};
  auto state = clf.net.state();
  nn::load_state(dir / "weights" / "model.bin", state);
  return clf;
}

}  // namespace sdnet::classifier
