#include <CLI11.hpp>
#include <cxxabi.h>

#include <iostream>
#include <opencv2/imgcodecs.hpp>

#include "sdnet/explain/explain.hpp"
#include "sdnet/pipeline/config.hpp"
#include "sdnet/pipeline/workdir.hpp"
#include "sdnet/util/csv.hpp"

namespace {

using namespace sdnet;

std::string demangled(const std::exception& e) {
  int status = 0;
  char* name = abi::__cxa_demangle(typeid(e).name(), nullptr, nullptr, &status);
  std::string out = status == 0 && name ? name : typeid(e).name();
  std::free(name);
  return out;
}

struct Session {
  pipeline::RunConfig config;
  std::filesystem::path workdir;
  std::unique_ptr<pipeline::WorkDirLock> lock;

  explicit Session(const pipeline::CliOverrides& overrides) {
    config = pipeline::resolve_config(overrides);
    if (config.workdir.empty()) throw ConfigError("--workdir (or paths.workdir) is required");
    workdir = config.workdir;
    lock = std::make_unique<pipeline::WorkDirLock>(workdir);
    util::write_json(workdir / "config.resolved.json", config.to_json());
  }

  dataset::DatasetManifest manifest() const {
    if (config.manifest_path.empty())
      throw ConfigError("a manifest is required (paths.manifest or --manifest)");
    dataset::LoadOptions options;
    if (!config.image_root.empty()) options.root = config.image_root;
    auto m = dataset::load_manifest(config.manifest_path, options);
    return config.exclude_normal_pcr ? dataset::exclude_normal_pcr(m) : m;
  }

  dataset::CvPlan plan_for(const dataset::DatasetManifest& m, bool persist) const {
    const auto plan_path = workdir / "cv_plan.json";
    if (std::filesystem::exists(plan_path))
      return dataset::CvPlan::from_json(util::read_json(plan_path));
    auto plan = dataset::make_cv_plan(m, config.plan);
    if (persist) util::write_json(plan_path, plan.to_json());
    return plan;
  }

  /// Cropped image if the crop stage materialized it, otherwise computed live
  /// (raw for the no_seg variant).
  cv::Mat working_image(const dataset::DatasetManifest& m, const dataset::ImageRecord& rec,
                        preprocess::SegmentationBackend& backend) const {
    if (config.variant != eval::Variant::NoSeg) {
      const auto cached = workdir / "crops" / (rec.id + ".png");
      if (std::filesystem::exists(cached)) return preprocess::load_image(cached);
      const auto raw = preprocess::load_image(m.resolve_path(rec));
      return preprocess::segment_and_crop(raw, backend, rec.id, config.preprocess).image;
    }
    return preprocess::load_image(m.resolve_path(rec));
  }
};

int cmd_ingest(Session& s) {
  const auto m = s.manifest();
  dataset::save_manifest_csv(s.workdir / "manifest.normalized.csv", m);

  std::map<std::string, int> by_severity;
  for (const auto& rec : m.records) by_severity[dataset::to_string(rec.severity)]++;
  util::json summary{{"schema_version", kSchemaVersion},
                     {"n", m.n()},
                     {"positives", m.count(dataset::ClassLabel::P)},
                     {"negatives", m.count(dataset::ClassLabel::N)},
                     {"by_severity", by_severity},
                     {"data_hash", dataset::manifest_hash(m)},
                     {"config_hash", s.config.hash()},
                     {"exclude_normal_pcr", s.config.exclude_normal_pcr}};
  util::write_json(s.workdir / "ingest_summary.json", summary);
  std::cout << "ingested " << m.n() << " records (" << m.count(dataset::ClassLabel::P)
            << " P, " << m.count(dataset::ClassLabel::N) << " N)\n";
  return 0;
}

int cmd_crop(Session& s) {
  const auto m = s.manifest();
  auto backend = preprocess::make_backend(s.config.backend);
  const auto out_dir = s.workdir / "crops";
  std::filesystem::create_directories(out_dir);

  for (const auto& rec : m.records) {
    cv::Mat raw;
    try {
      raw = preprocess::load_image(m.resolve_path(rec));
    } catch (const preprocess::DegenerateImage& e) {
      throw preprocess::DegenerateImage("record '" + rec.id + "': " + e.what());
    }
    const auto outcome = preprocess::segment_and_crop(raw, *backend, rec.id, s.config.preprocess);
    cv::imwrite((out_dir / (rec.id + ".png")).string(), outcome.image);
    util::json sidecar{{"id", rec.id},
                       {"box", outcome.box.to_json()},
                       {"margin", s.config.preprocess.margin},
                       {"backend_identity", backend->identity()},
                       {"empty_mask_fallback", outcome.empty_mask_fallback},
                       {"config_hash", s.config.hash()}};
    util::write_json(out_dir / (rec.id + ".json"), sidecar);
  }
  std::cout << "cropped " << m.n() << " images into " << out_dir.string() << "\n";
  return 0;
}

int cmd_split(Session& s) {
  const auto m = s.manifest();
  const auto plan = dataset::make_cv_plan(m, s.config.plan);
  util::write_json(s.workdir / "cv_plan.json", plan.to_json());
  std::cout << "cv_plan.json: " << plan.repeats << " repeats x " << plan.folds << " folds ("
            << plan.assignments.size() << " triples)\n";
  return 0;
}

/// Random 10% (round-half-up, at least 1) of the manifest for validation.
std::pair<std::vector<const dataset::ImageRecord*>, std::vector<const dataset::ImageRecord*>>
holdout_split(const dataset::DatasetManifest& m, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(m.n());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  util::Rng rng(seed, 6);
  rng.shuffle(order);
  const std::size_t val_n =
      std::max<std::size_t>(1, static_cast<std::size_t>(round_half_up(fraction * m.n())));
  std::pair<std::vector<const dataset::ImageRecord*>, std::vector<const dataset::ImageRecord*>>
      out;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < val_n ? out.second : out.first).push_back(&m.records[order[i]]);
  return out;
}

int cmd_train_cit(Session& s) {
  const auto m = s.manifest();
  if (m.n() == 0) throw EmptyDataset("manifest has no records");
  auto backend = preprocess::make_backend(s.config.backend);
  const auto [train_recs, val_recs] =
      holdout_split(m, s.config.plan.val_fraction, s.config.cit_schedule.seed);

  auto to_samples = [&](const std::vector<const dataset::ImageRecord*>& recs) {
    std::vector<cit::CitSample> out;
    for (const auto* rec : recs)
      out.push_back({rec->id,
                     preprocess::prepare_image(s.working_image(m, *rec, *backend),
                                               s.config.prepare),
                     rec->label});
    return out;
  };

  auto cit = cit::train_cit(to_samples(train_recs), to_samples(val_recs), s.config.cit_loss,
                            s.config.cit_schedule, s.config.generator,
                            nn::ResNetConfig::named(s.config.cit_clf_backbone));
  cit::save_cit(s.workdir / "cit", cit, dataset::manifest_hash(m));
  std::cout << "trained transformation generators: best epoch " << cit.best_epoch << " of "
            << cit.history.size() << "\n";
  return 0;
}

int cmd_transform(Session& s) {
  const auto m = s.manifest();
  auto cit = cit::load_cit(s.workdir / "cit");
  auto backend = preprocess::make_backend(s.config.backend);
  const auto out_dir = s.workdir / "expanded";
  const auto expanded = cit::expand_dataset(
      m, cit.gens, s.config.prepare, out_dir,
      [&](const dataset::ImageRecord& rec) { return s.working_image(m, rec, *backend); });
  cit::save_expanded_csv(out_dir / "expanded.csv", expanded);
  std::cout << "expanded " << m.n() << " sources into " << expanded.records.size()
            << " transformed images\n";
  return 0;
}

int cmd_train_clf(Session& s) {
  const auto m = s.manifest();
  auto cfg = s.config.clf;
  cfg.seed = s.config.clf.seed;
  std::vector<classifier::LabeledImage> train, val;

  if (s.config.variant == eval::Variant::SdNet) {
    const auto csv = s.workdir / "expanded" / "expanded.csv";
    if (!std::filesystem::exists(csv))
      throw ConfigError("no expanded dataset at " + csv.string() + "; run `transform` first");
    const auto expanded = cit::load_expanded_csv(csv);

    // Hold out whole source images so a pair never straddles the split.
    std::set<std::string> sources;
    for (const auto& rec : expanded.records) sources.insert(rec.source_id);
    std::vector<std::string> source_list(sources.begin(), sources.end());
    util::Rng rng(cfg.seed, 6);
    rng.shuffle(source_list);
    const std::size_t val_n = std::max<std::size_t>(
        1, static_cast<std::size_t>(round_half_up(0.10 * source_list.size())));
    std::set<std::string> val_sources(source_list.begin(), source_list.begin() + val_n);

    for (const auto& rec : expanded.records) {
      classifier::LabeledImage li{rec.source_id + (rec.plus ? "+" : "-"),
                                  preprocess::load_image(std::filesystem::path(expanded.root) /
                                                         rec.path),
                                  static_cast<int>(rec.label4)};
      (val_sources.count(rec.source_id) ? val : train).push_back(std::move(li));
    }
    cfg.num_classes = 4;
  } else {
    auto backend = preprocess::make_backend(s.config.backend);
    const auto [train_recs, val_recs] = holdout_split(m, s.config.plan.val_fraction, cfg.seed);
    for (const auto* rec : train_recs)
      train.push_back({rec->id, s.working_image(m, *rec, *backend),
                       rec->label == dataset::ClassLabel::P ? 1 : 0});
    for (const auto* rec : val_recs)
      val.push_back({rec->id, s.working_image(m, *rec, *backend),
                     rec->label == dataset::ClassLabel::P ? 1 : 0});
    cfg.num_classes = 2;
  }

  auto trained = classifier::train_classifier(train, val, cfg, s.config.prepare);
  classifier::save_classifier(s.workdir / "clf", trained, dataset::manifest_hash(m));
  std::cout << "trained " << cfg.num_classes << "-class classifier: best epoch "
            << trained.best_epoch << ", val accuracy "
            << (trained.history.empty() ? 0.0
                                        : trained.history[trained.best_epoch].val_accuracy)
            << "\n";
  return 0;
}

int cmd_infer(Session& s, const std::string& image_path, std::string id) {
  if (id.empty()) id = std::filesystem::path(image_path).stem().string();
  auto cit = cit::load_cit(s.workdir / "cit");
  auto clf = classifier::load_classifier(s.workdir / "clf");
  if (clf.config.num_classes != 4)
    throw classifier::LabelArityMismatch(
        "infer needs the four-class classifier (variant sdnet); found K=" +
        std::to_string(clf.config.num_classes));
  auto backend = preprocess::make_backend(s.config.backend);

  fusion::InferContext ctx{*backend,       cit.gens,
                           clf.net,        s.config.preprocess,
                           s.config.prepare, s.config.variant != eval::Variant::NoSeg};
  const auto trace = fusion::infer_case(preprocess::load_image(image_path), id, ctx);

  std::filesystem::create_directories(s.workdir / "traces");
  auto j = trace.to_json();
  j["config_hash"] = s.config.hash();
  util::write_json(s.workdir / "traces" / (id + ".json"), j);
  std::cout << id << ": " << dataset::to_string(trace.label) << " (rule "
            << fusion::to_string(trace.rule) << ")\n";
  return 0;
}

int cmd_evaluate(Session& s) {
  const auto m = s.manifest();
  const auto plan = s.plan_for(m, /*persist=*/true);
  auto ec = s.config.experiment_config();
  const auto out_dir = s.workdir / "experiments" / eval::to_string(s.config.variant);
  const auto report = eval::run_experiment(m, plan, ec, out_dir, &std::cout);
  std::cout << eval::render_table({report});
  return 0;
}

int cmd_explain(Session& s, const std::vector<std::string>& ids,
                const std::string& image_path) {
  auto clf = classifier::load_classifier(s.workdir / "clf");
  const auto out_dir = s.workdir / "explain";

  auto explain_one = [&](const std::string& id, const cv::Mat& image) {
    const auto prepared = preprocess::prepare_image(image, s.config.prepare);
    explain::write_triptych(out_dir, id, image, clf.net, prepared, clf.class_names,
                            s.config.explain_colormap, s.config.explain_alpha);
  };

  if (!image_path.empty()) {
    explain_one(std::filesystem::path(image_path).stem().string(),
                preprocess::load_image(image_path));
  } else {
    if (ids.empty()) throw ConfigError("explain needs --image or --id entries");
    const auto m = s.manifest();
    auto backend = preprocess::make_backend(s.config.backend);
    std::map<std::string, const dataset::ImageRecord*> by_id;
    for (const auto& rec : m.records) by_id[rec.id] = &rec;
    for (const auto& id : ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw ConfigError("id '" + id + "' is not in the manifest");
      explain_one(id, s.working_image(m, *it->second, *backend));
    }
  }
  std::cout << "explanations written to " << out_dir.string() << "\n";
  return 0;
}

int cmd_report(Session& s, std::vector<std::string> report_paths) {
  if (report_paths.empty()) {
    const auto base = s.workdir / "experiments";
    if (std::filesystem::exists(base))
      for (const auto& entry : std::filesystem::directory_iterator(base)) {
        const auto p = entry.path() / "report.json";
        if (std::filesystem::exists(p)) report_paths.push_back(p.string());
      }
    std::sort(report_paths.begin(), report_paths.end());
  }
  if (report_paths.empty()) throw ConfigError("no report.json found; run `evaluate` first");

  std::vector<eval::AggregateReport> reports;
  for (const auto& p : report_paths) {
    const auto j = util::read_json(p);
    const auto problems = eval::validate_report_json(j);
    if (!problems.empty())
      throw Error("report " + p + " fails schema validation: " + problems.front());
    reports.push_back(eval::AggregateReport::from_json(j));
  }
  const std::string table = eval::render_table(reports);
  std::cout << table;
  std::ofstream out(s.workdir / "report.txt");
  out << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chest X-ray triage pipeline: segmentation-based cropping, class-inherent "
               "transformations, twin-fusion inference, cross-validated evaluation and "
               "Grad-CAM explanations"};
  app.require_subcommand(1);

  pipeline::CliOverrides overrides;
  std::string config_path, workdir, variant, manifest;
  bool exclude_normal_pcr = false;
  std::uint64_t seed = 0;
  int repeats = 0, folds = 0;

  app.add_option("--config", config_path, "Run configuration file (JSON)");
  app.add_option("--workdir", workdir, "Work directory owning all artifacts");
  app.add_option("--manifest", manifest, "Dataset manifest CSV");
  app.add_option("--variant", variant, "Pipeline variant: no_seg, with_seg, cit_only, sdnet");
  auto* excl = app.add_flag("--exclude-normal-pcr", exclude_normal_pcr,
                            "Drop Normal-PCR+ records before any stage");
  auto* seed_opt = app.add_option("--seed", seed, "Base seed (plan and training streams)");
  auto* repeats_opt = app.add_option("--repeats", repeats, "Cross-validation repeats");
  auto* folds_opt = app.add_option("--folds", folds, "Cross-validation folds");
  app.fallthrough();

  auto* ingest = app.add_subcommand("ingest", "Validate the manifest and write a summary");
  auto* crop = app.add_subcommand("crop", "Segmentation-based cropping of every image");
  auto* split = app.add_subcommand("split", "Write the repeated stratified CV plan");
  auto* train_cit = app.add_subcommand("train-cit", "Train the transformation generators");
  auto* transform = app.add_subcommand("transform", "Expand the dataset with G_P/G_N");
  auto* train_clf = app.add_subcommand("train-clf", "Train the classification model");
  auto* infer = app.add_subcommand("infer", "Twin-fusion decision for one image");
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated experiment for a variant");
  auto* explain = app.add_subcommand("explain", "Grad-CAM decision + counterfactual panels");
  auto* report = app.add_subcommand("report", "Render report JSONs as an aligned table");

  std::string infer_image, infer_id, explain_image;
  std::vector<std::string> explain_ids, report_paths;
  infer->add_option("--image", infer_image, "Image file")->required();
  infer->add_option("--id", infer_id, "Case id for the trace (default: file stem)");
  explain->add_option("--image", explain_image, "Explain one image file");
  explain->add_option("--id", explain_ids, "Explain manifest records by id");
  report->add_option("--reports", report_paths, "Explicit report.json paths");

  CLI11_PARSE(app, argc, argv);

  if (!config_path.empty()) overrides.config_path = config_path;
  if (!workdir.empty()) overrides.workdir = workdir;
  if (!manifest.empty()) overrides.manifest = manifest;
  if (!variant.empty()) overrides.variant = variant;
  if (excl->count()) overrides.exclude_normal_pcr = exclude_normal_pcr;
  if (seed_opt->count()) overrides.seed = seed;
  if (repeats_opt->count()) overrides.repeats = repeats;
  if (folds_opt->count()) overrides.folds = folds;

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    Session session(overrides);
    try {
      if (ingest->parsed()) return cmd_ingest(session);
      if (crop->parsed()) return cmd_crop(session);
      if (split->parsed()) return cmd_split(session);
      if (train_cit->parsed()) return cmd_train_cit(session);
      if (transform->parsed()) return cmd_transform(session);
      if (train_clf->parsed()) return cmd_train_clf(session);
      if (infer->parsed()) return cmd_infer(session, infer_image, infer_id);
      if (evaluate->parsed()) return cmd_evaluate(session);
      if (explain->parsed()) return cmd_explain(session, explain_ids, explain_image);
      if (report->parsed()) return cmd_report(session, report_paths);
      throw ConfigError("unknown subcommand '" + subcommand + "'");
    } catch (const std::exception& e) {
      pipeline::write_error_record(session.workdir, subcommand, demangled(e), e.what());
      throw;
    }
  } catch (const std::exception& e) {
    std::cerr << "error [" << demangled(e) << "]: " << e.what() << "\n";
    return 1;
  }
}
