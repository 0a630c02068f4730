#include "sdnet/cit/train.hpp"

#include "sdnet/nn/optim.hpp"
#include "sdnet/nn/serialize.hpp"
#include "sdnet/util/rng.hpp"

namespace sdnet::cit {

util::json CitSchedule::to_json() const {
  return {{"max_epochs", max_epochs}, {"patience", patience},   {"lr", lr},
          {"momentum", momentum},     {"batch_size", batch_size}, {"seed", seed}};
}

CitSchedule CitSchedule::from_json(const util::json& j) {
  CitSchedule s;
  s.max_epochs = j.value("max_epochs", s.max_epochs);
  s.patience = j.value("patience", s.patience);
  s.lr = j.value("lr", s.lr);
  s.momentum = j.value("momentum", s.momentum);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.seed = j.value("seed", s.seed);
  return s;
}

namespace {

nn::Tensor stack_batch(const std::vector<CitSample>& samples, const std::vector<std::size_t>& idx,
                       std::size_t begin, std::size_t end) {
  const auto& first = samples[idx[begin]].image;
  const int c = first.shape(0), h = first.shape(1), w = first.shape(2);
  nn::Tensor batch({static_cast<int>(end - begin), c, h, w});
  const std::size_t stride = first.size();
  for (std::size_t i = begin; i < end; ++i) {
    const auto& img = samples[idx[i]].image;
    if (img.size() != stride)
      throw nn::ShapeMismatch("all images in a batch must share one shape");
    std::copy(img.data(), img.data() + stride, batch.data() + (i - begin) * stride);
  }
  return batch;
}

std::vector<dataset::ClassLabel> batch_labels(const std::vector<CitSample>& samples,
                                              const std::vector<std::size_t>& idx,
                                              std::size_t begin, std::size_t end) {
  std::vector<dataset::ClassLabel> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(samples[idx[i]].label);
  return out;
}

std::vector<int> as_targets(const std::vector<dataset::ClassLabel>& labels) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(static_cast<int>(l));
  return out;
}

}  // namespace

TrainedCit train_cit(const std::vector<CitSample>& train, const std::vector<CitSample>& val,
                     const CitLossConfig& loss_config, const CitSchedule& schedule,
                     const nn::GeneratorConfig& gen_config,
                     const nn::ResNetConfig& clf_backbone) {
  if (train.empty() || val.empty())
    throw EmptyDataset("train_cit needs non-empty train and validation sets");

  util::Rng init_rng(schedule.seed, 1);
  nn::ClassifierNetConfig clf_cfg;
  clf_cfg.backbone = clf_backbone;
  clf_cfg.backbone.in_channels = gen_config.in_channels;
  clf_cfg.hidden_units = 0;
  clf_cfg.num_classes = 2;

  TrainedCit cit{GeneratorPair{nn::ResidualGenerator(gen_config, init_rng),
                               nn::ResidualGenerator(gen_config, init_rng)},
                 nn::ClassifierNet(clf_cfg, init_rng),
                 {},
                 -1,
                 loss_config,
                 gen_config,
                 clf_backbone,
                 schedule};

  const auto extractor = make_feature_extractor(loss_config.extractor, gen_config.in_channels);

  auto state_p = cit.gens.gen_p.state();
  auto state_n = cit.gens.gen_n.state();
  auto state_c = cit.internal_clf.state();
  nn::Sgd sgd_p(state_p.param_vars(), schedule.lr, schedule.momentum);
  nn::Sgd sgd_n(state_n.param_vars(), schedule.lr, schedule.momentum);
  nn::Sgd sgd_c(state_c.param_vars(), schedule.lr, schedule.momentum);
  auto zero_all = [&] {
    sgd_p.zero_grad();
    sgd_n.zero_grad();
    sgd_c.zero_grad();
  };

  util::Rng shuffle_rng(schedule.seed, 2);
  nn::EarlyStopping stopper(schedule.patience);
  std::vector<std::vector<nn::Tensor>> best{nn::snapshot(state_p), nn::snapshot(state_n),
                                            nn::snapshot(state_c)};

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto batch_size = static_cast<std::size_t>(schedule.batch_size);

  // One generator's pass: forward, composite loss, gradients. The classifier
  // runs in inference mode here; its own statistics update in its own step.
  auto generator_pass = [&](nn::ResidualGenerator& gen, nn::Sgd& sgd,
                            dataset::ClassLabel k, const nn::Var& x,
                            const std::vector<dataset::ClassLabel>& labels, bool update,
                            nn::Var* out = nullptr) -> CitLossParts {
    nn::Var gen_out = gen.forward(x, update);
    nn::Var logits = cit.internal_clf.forward(gen_out, /*training=*/false);
    CitLossParts parts;
    try {
      parts = cit_loss(gen_out, x, logits, labels, k, *extractor, loss_config);
    } catch (const nn::NonFiniteLoss& e) {
      throw DivergedTraining(e.what());
    }
    if (update) {
      zero_all();
      nn::backward(parts.total);
      sgd.step();
    }
    if (out) *out = gen_out;
    return parts;
  };

  auto accumulate = [](CitComponentLosses& acc, const CitLossParts& parts, double weight) {
    acc.mse += weight * parts.mse->value.item();
    acc.perceptual += weight * parts.perceptual->value.item();
    acc.ce += weight * parts.ce->value.item();
    acc.total += weight * parts.total->value.item();
  };

  for (int epoch = 0; epoch < schedule.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    CitEpoch entry;
    entry.epoch = epoch;

    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      const double w = static_cast<double>(end - begin) / static_cast<double>(train.size());
      nn::Var x = nn::make_leaf(stack_batch(train, order, begin, end), false);
      const auto labels = batch_labels(train, order, begin, end);

      nn::Var out_p, out_n;
      accumulate(entry.gen_p,
                 generator_pass(cit.gens.gen_p, sgd_p, dataset::ClassLabel::P, x, labels, true,
                                &out_p),
                 w);
      accumulate(entry.gen_n,
                 generator_pass(cit.gens.gen_n, sgd_n, dataset::ClassLabel::N, x, labels, true,
                                &out_n),
                 w);

      // Classifier step on the detached transformed images, true labels.
      zero_all();
      const auto targets = as_targets(labels);
      nn::Var ce_p = nn::softmax_cross_entropy(
          cit.internal_clf.forward(nn::detach(out_p), /*training=*/true), targets);
      nn::Var ce_n = nn::softmax_cross_entropy(
          cit.internal_clf.forward(nn::detach(out_n), /*training=*/true), targets);
      nn::Var clf_loss = nn::scale(nn::add(ce_p, ce_n), 0.5);
      if (!clf_loss->value.all_finite())
        throw DivergedTraining("internal classifier loss is not finite");
      nn::backward(clf_loss);
      sgd_c.step();
      zero_all();
    }

    // Validation total = L_gen_P + L_gen_N with frozen weights.
    std::vector<std::size_t> val_order(val.size());
    for (std::size_t i = 0; i < val_order.size(); ++i) val_order[i] = i;
    double val_total = 0;
    for (std::size_t begin = 0; begin < val_order.size(); begin += batch_size) {
      const std::size_t end = std::min(val_order.size(), begin + batch_size);
      const double w = static_cast<double>(end - begin) / static_cast<double>(val.size());
      nn::Var x = nn::make_leaf(stack_batch(val, val_order, begin, end), false);
      const auto labels = batch_labels(val, val_order, begin, end);
      const auto parts_p =
          generator_pass(cit.gens.gen_p, sgd_p, dataset::ClassLabel::P, x, labels, false);
      const auto parts_n =
          generator_pass(cit.gens.gen_n, sgd_n, dataset::ClassLabel::N, x, labels, false);
      val_total += w * (parts_p.total->value.item() + parts_n.total->value.item());
    }
    entry.val_total = val_total;
    cit.history.push_back(entry);

    if (stopper.update(val_total, epoch)) {
      best = {nn::snapshot(state_p), nn::snapshot(state_n), nn::snapshot(state_c)};
      cit.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }

  nn::restore(state_p, best[0]);
  nn::restore(state_n, best[1]);
  nn::restore(state_c, best[2]);
  return cit;
}

void save_cit(const std::filesystem::path& dir, TrainedCit& cit, const std::string& data_hash) {
  std::filesystem::create_directories(dir);
  auto state_p = cit.gens.gen_p.state();
  auto state_n = cit.gens.gen_n.state();
  auto state_c = cit.internal_clf.state();
  nn::save_state(dir / "gen_P" / "weights.bin", state_p);
  nn::save_state(dir / "gen_N" / "weights.bin", state_n);
  nn::save_state(dir / "internal_clf" / "weights.bin", state_c);

  util::json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["loss"] = cit.loss_config.to_json();
  meta["generator"] = cit.gen_config.to_json();
  meta["clf_backbone"] = cit.clf_backbone.to_json();
  meta["schedule"] = cit.schedule.to_json();
  meta["seed"] = cit.schedule.seed;
  meta["rng"] = util::Rng::kIdentity;
  meta["data_hash"] = data_hash;
  meta["best_epoch"] = cit.best_epoch;
  meta["epochs_run"] = cit.history.size();
  util::write_json(dir / "meta.json", meta);
}

TrainedCit load_cit(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "meta.json"))
    throw nn::CheckpointMissing("no transformation checkpoint at " + dir.string());
  const auto meta = util::read_json(dir / "meta.json");

  const auto gen_cfg = nn::GeneratorConfig::from_json(meta.at("generator"));
  const auto clf_backbone = nn::ResNetConfig::from_json(meta.at("clf_backbone"));
  const auto loss_cfg = CitLossConfig::from_json(meta.at("loss"));
  const auto schedule = CitSchedule::from_json(meta.at("schedule"));

  util::Rng rng(0);
  nn::ClassifierNetConfig clf_cfg;
  clf_cfg.backbone = clf_backbone;
  clf_cfg.backbone.in_channels = gen_cfg.in_channels;
  clf_cfg.hidden_units = 0;
  clf_cfg.num_classes = 2;

  TrainedCit cit{GeneratorPair{nn::ResidualGenerator(gen_cfg, rng),
                               nn::ResidualGenerator(gen_cfg, rng)},
                 nn::ClassifierNet(clf_cfg, rng),
                 {},
                 meta.value("best_epoch", -1),
                 loss_cfg,
                 gen_cfg,
                 clf_backbone,
                 schedule};
  auto state_p = cit.gens.gen_p.state();
  auto state_n = cit.gens.gen_n.state();
  auto state_c = cit.internal_clf.state();
  nn::load_state(dir / "gen_P" / "weights.bin", state_p);
  nn::load_state(dir / "gen_N" / "weights.bin", state_n);
  nn::load_state(dir / "internal_clf" / "weights.bin", state_c);
  return cit;
}

}  // namespace sdnet::cit
