#include "sdnet/eval/experiment.hpp"

#include <unordered_map>

#include "sdnet/dataset/manifest.hpp"
#include "sdnet/util/csv.hpp"
#include "sdnet/util/hash.hpp"

namespace sdnet::eval {

std::uint64_t fold_seed(std::uint64_t base, int repeat, int fold) {
  struct {
    std::uint64_t base;
    std::int32_t repeat, fold;
  } key{base, repeat, fold};
  return util::fnv1a64(&key, sizeof(key));
}

namespace {

struct FoldData {
  std::vector<const dataset::ImageRecord*> train, val, test;
};

struct ImageCache {
  const dataset::DatasetManifest& manifest;
  const ExperimentConfig& config;
  preprocess::SegmentationBackend* backend = nullptr;
  std::unordered_map<std::string, const dataset::ImageRecord*> by_id;
  std::unordered_map<std::string, cv::Mat> working;  // cropped (or raw for no_seg)

  explicit ImageCache(const dataset::DatasetManifest& m, const ExperimentConfig& c,
                      preprocess::SegmentationBackend* b)
      : manifest(m), config(c), backend(b) {
    for (const auto& rec : m.records) by_id[rec.id] = &rec;
  }

  const dataset::ImageRecord& record(const std::string& id) const {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("plan id '" + id + "' is not in the manifest");
    return *it->second;
  }

  const cv::Mat& image(const std::string& id) {
    auto it = working.find(id);
    if (it != working.end()) return it->second;
    const auto& rec = record(id);
    cv::Mat raw = preprocess::load_image(manifest.resolve_path(rec));
    cv::Mat out = raw;
    if (config.variant != Variant::NoSeg) {
      const auto outcome =
          preprocess::segment_and_crop(raw, *backend, rec.id, config.preprocess);
      out = outcome.image;
    }
    return working.emplace(id, std::move(out)).first->second;
  }
};

std::vector<cit::CitSample> cit_samples(ImageCache& cache,
                                        const std::vector<const dataset::ImageRecord*>& recs,
                                        const preprocess::PrepareSettings& prep) {
  std::vector<cit::CitSample> out;
  out.reserve(recs.size());
  for (const auto* rec : recs)
    out.push_back({rec->id, preprocess::prepare_image(cache.image(rec->id), prep), rec->label});
  return out;
}

int label01(dataset::ClassLabel label) { return label == dataset::ClassLabel::P ? 1 : 0; }

// Two-class decisions: plain classifier on the working images.
std::vector<dataset::ClassLabel> run_plain_fold(ImageCache& cache, const FoldData& fold,
                                                const ExperimentConfig& config,
                                                std::uint64_t seed) {
  std::vector<classifier::LabeledImage> train, val;
  for (const auto* rec : fold.train)
    train.push_back({rec->id, cache.image(rec->id), label01(rec->label)});
  for (const auto* rec : fold.val)
    val.push_back({rec->id, cache.image(rec->id), label01(rec->label)});

  auto cfg = config.clf;
  cfg.num_classes = 2;
  cfg.seed = seed;
  auto trained = classifier::train_classifier(train, val, cfg, config.prepare);

  std::vector<dataset::ClassLabel> decisions;
  decisions.reserve(fold.test.size());
  for (const auto* rec : fold.test) {
    const auto pred = classifier::predict(
        trained.net, preprocess::prepare_image(cache.image(rec->id), config.prepare));
    decisions.push_back(pred.label_index == 1 ? dataset::ClassLabel::P
                                              : dataset::ClassLabel::N);
  }
  return decisions;
}

cit::TrainedCit train_fold_cit(ImageCache& cache, const FoldData& fold,
                               const ExperimentConfig& config, std::uint64_t seed) {
  auto schedule = config.cit_schedule;
  schedule.seed = seed;
  return cit::train_cit(cit_samples(cache, fold.train, config.prepare),
                        cit_samples(cache, fold.val, config.prepare), config.cit_loss, schedule,
                        config.generator, nn::ResNetConfig::named(config.cit_clf_backbone));
}

// Transformation-only decisions: each generator argues for its own class via
// the internal two-class classifier; the better own-class score wins (P on
// ties, consistent with the triage tie-break).
std::vector<dataset::ClassLabel> run_cit_only_fold(ImageCache& cache, const FoldData& fold,
                                                   const ExperimentConfig& config,
                                                   std::uint64_t seed) {
  const auto cit = train_fold_cit(cache, fold, config, seed);
  std::vector<dataset::ClassLabel> decisions;
  decisions.reserve(fold.test.size());
  for (const auto* rec : fold.test) {
    const auto prepared = preprocess::prepare_image(cache.image(rec->id), config.prepare);
    const auto [plus, minus] = cit::transform_pair(cit.gens, prepared);
    const auto pred_p = classifier::predict(cit.internal_clf, plus);
    const auto pred_n = classifier::predict(cit.internal_clf, minus);
    const double score_p = pred_p.probs.probs[1];
    const double score_n = pred_n.probs.probs[0];
    decisions.push_back(score_p >= score_n ? dataset::ClassLabel::P : dataset::ClassLabel::N);
  }
  return decisions;
}

// Full pipeline: CiT, four-class classifier on the expanded set, twin fusion.
std::vector<dataset::ClassLabel> run_sdnet_fold(ImageCache& cache, const FoldData& fold,
                                                const ExperimentConfig& config,
                                                std::uint64_t seed,
                                                std::vector<fusion::TraceRecord>* traces) {
  const auto cit = train_fold_cit(cache, fold, config, seed);

  auto expand = [&](const std::vector<const dataset::ImageRecord*>& recs) {
    std::vector<classifier::LabeledImage> out;
    out.reserve(recs.size() * 2);
    for (const auto* rec : recs) {
      const auto prepared = preprocess::prepare_image(cache.image(rec->id), config.prepare);
      const auto [plus, minus] = cit::transform_pair(cit.gens, prepared);
      out.push_back({rec->id + "+", preprocess::tensor_to_image(plus, config.prepare),
                     static_cast<int>(cit::transformed_label(rec->label, true))});
      out.push_back({rec->id + "-", preprocess::tensor_to_image(minus, config.prepare),
                     static_cast<int>(cit::transformed_label(rec->label, false))});
    }
    return out;
  };

  auto cfg = config.clf;
  cfg.num_classes = 4;
  cfg.seed = seed;
  auto trained = classifier::train_classifier(expand(fold.train), expand(fold.val), cfg,
                                              config.prepare);

  std::vector<dataset::ClassLabel> decisions;
  decisions.reserve(fold.test.size());
  for (const auto* rec : fold.test) {
    const auto prepared = preprocess::prepare_image(cache.image(rec->id), config.prepare);
    const auto [plus, minus] = cit::transform_pair(cit.gens, prepared);
    const auto as_input = [&](const nn::Tensor& t) {
      return preprocess::prepare_image(preprocess::tensor_to_image(t, config.prepare),
                                       config.prepare);
    };
    const auto pred_plus = classifier::predict(trained.net, as_input(plus));
    const auto pred_minus = classifier::predict(trained.net, as_input(minus));
    fusion::FusionInput input;
    for (int i = 0; i < 4; ++i) {
      input.theta[i] = pred_plus.probs.probs[i];
      input.psi[i] = pred_minus.probs.probs[i];
    }
    const auto decision = fusion::fuse(input);
    decisions.push_back(decision.label);
    if (traces) {
      fusion::TraceRecord trace;
      trace.id = rec->id;
      const auto& img = cache.image(rec->id);
      trace.box = preprocess::Box{0, 0, img.cols - 1, img.rows - 1};
      trace.theta = input.theta;
      trace.psi = input.psi;
      trace.rule = decision.rule;
      trace.label = decision.label;
      traces->push_back(std::move(trace));
    }
  }
  return decisions;
}

void write_fold_predictions(const std::filesystem::path& dir, const FoldData& fold,
                            const std::vector<dataset::ClassLabel>& decisions) {
  std::filesystem::create_directories(dir);
  util::CsvTable table;
  table.header = {"id", "label", "severity", "decision"};
  for (std::size_t i = 0; i < fold.test.size(); ++i)
    table.rows.push_back({fold.test[i]->id, dataset::to_string(fold.test[i]->label),
                          dataset::to_string(fold.test[i]->severity),
                          dataset::to_string(decisions[i])});
  util::write_csv(dir / "predictions.csv", table);
}

}  // namespace

AggregateReport run_experiment(const dataset::DatasetManifest& manifest,
                               const dataset::CvPlan& plan, const ExperimentConfig& config,
                               const std::filesystem::path& out_dir, std::ostream* log) {
  std::filesystem::create_directories(out_dir);
  auto backend = preprocess::make_backend(config.backend);
  ImageCache cache(manifest, config, backend.get());

  AggregateReport report;
  report.variant = to_string(config.variant);
  report.config_hash = config.config_hash;
  report.meta = config.extra_meta;
  report.meta["plan_seed"] = plan.seed;
  report.meta["repeats"] = plan.repeats;
  report.meta["folds"] = plan.folds;
  report.meta["rng"] = util::Rng::kIdentity;
  report.meta["data_hash"] = dataset::manifest_hash(manifest);
  report.meta["backend_identity"] = backend->identity();
  report.meta["cit_loss"] = config.cit_loss.to_json();
  report.meta["classifier"] = config.clf.to_json();

  try {
    for (const auto& assignment : plan.assignments) {
      FoldData fold;
      for (const auto& id : assignment.train) fold.train.push_back(&cache.record(id));
      for (const auto& id : assignment.val) fold.val.push_back(&cache.record(id));
      for (const auto& id : assignment.test) fold.test.push_back(&cache.record(id));

      const std::uint64_t seed = fold_seed(plan.seed, assignment.repeat, assignment.fold);
      if (log)
        (*log) << "[evaluate] variant=" << report.variant << " repeat=" << assignment.repeat
               << " fold=" << assignment.fold << " train=" << fold.train.size()
               << " val=" << fold.val.size() << " test=" << fold.test.size() << std::endl;

      std::vector<dataset::ClassLabel> decisions;
      switch (config.variant) {
        case Variant::NoSeg:
        case Variant::WithSeg:
          decisions = run_plain_fold(cache, fold, config, seed);
          break;
        case Variant::CitOnly:
          decisions = run_cit_only_fold(cache, fold, config, seed);
          break;
        case Variant::SdNet:
          decisions = run_sdnet_fold(cache, fold, config, seed, nullptr);
          break;
      }

      RunResult run;
      run.repeat = assignment.repeat;
      run.fold = assignment.fold;
      std::vector<dataset::ClassLabel> labels;
      std::vector<dataset::SeverityLevel> severities;
      for (const auto* rec : fold.test) {
        labels.push_back(rec->label);
        severities.push_back(rec->severity);
      }
      run.cm = confusion(decisions, labels);
      run.metrics = metrics(run.cm);
      run.severity = severity_accuracy(decisions, labels, severities);
      report.runs.push_back(run);

      write_fold_predictions(out_dir / "runs" /
                                 ("r" + std::to_string(assignment.repeat) + "_f" +
                                  std::to_string(assignment.fold)),
                             fold, decisions);
    }
  } catch (...) {
    aggregate_runs(report, config.repeat_level_std);
    report.meta["aborted"] = true;
    util::write_json(out_dir / "report.partial.json", report.to_json());
    throw;
  }

  aggregate_runs(report, config.repeat_level_std);
  util::write_json(out_dir / "report.json", report.to_json());
  return report;
}

}  // namespace sdnet::eval
