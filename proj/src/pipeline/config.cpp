#include "sdnet/pipeline/config.hpp"

#include <algorithm>
#include <cstdlib>

extern char** environ;

namespace sdnet::pipeline {

namespace {

util::json prepare_to_json(const preprocess::PrepareSettings& p) {
  return {{"side", p.side},
          {"mean", std::vector<double>(p.mean.begin(), p.mean.end())},
          {"std", std::vector<double>(p.stddev.begin(), p.stddev.end())}};
}

preprocess::PrepareSettings prepare_from_json(const util::json& j) {
  preprocess::PrepareSettings p;
  p.side = j.value("side", p.side);
  if (j.contains("mean")) {
    const auto v = j.at("mean").get<std::vector<double>>();
    if (v.size() != 3) throw ConfigError("prepare.mean must have 3 entries");
    std::copy(v.begin(), v.end(), p.mean.begin());
  }
  if (j.contains("std")) {
    const auto v = j.at("std").get<std::vector<double>>();
    if (v.size() != 3) throw ConfigError("prepare.std must have 3 entries");
    std::copy(v.begin(), v.end(), p.stddev.begin());
  }
  return p;
}

}  // namespace

util::json RunConfig::to_json() const {
  util::json j;
  j["paths"] = {{"manifest", manifest_path}, {"image_root", image_root}, {"workdir", workdir}};
  j["variant"] = eval::to_string(variant);
  j["exclude_normal_pcr"] = exclude_normal_pcr;
  j["plan"] = {{"repeats", plan.repeats},
               {"folds", plan.folds},
               {"val_fraction", plan.val_fraction},
               {"seed", plan.seed},
               {"repeat_seeds", plan.repeat_seeds}};
  j["preprocess"] = {
      {"threshold", preprocess.threshold},
      {"margin", preprocess.margin},
      {"margin_mode",
       preprocess.margin_mode == preprocess::MarginMode::BoxRelative ? "box" : "image"},
      {"backend", {{"kind", backend.kind}, {"mask_dir", backend.mask_dir}}}};
  j["prepare"] = prepare_to_json(prepare);
  j["cit"] = {{"loss", cit_loss.to_json()},
              {"schedule", cit_schedule.to_json()},
              {"generator", generator.to_json()},
              {"clf_backbone", cit_clf_backbone}};
  j["classifier"] = clf.to_json();
  j["evaluate"] = {{"repeat_level_std", repeat_level_std}};
  j["explain"] = {{"colormap", explain_colormap}, {"alpha", explain_alpha}};
  return j;
}

RunConfig RunConfig::from_json(const util::json& j) {
  RunConfig c;
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    c.manifest_path = p.value("manifest", "");
    c.image_root = p.value("image_root", "");
    c.workdir = p.value("workdir", "");
  }
  if (j.contains("variant")) c.variant = eval::variant_from_string(j.at("variant"));
  c.exclude_normal_pcr = j.value("exclude_normal_pcr", false);
  if (j.contains("plan")) {
    const auto& p = j.at("plan");
    c.plan.repeats = p.value("repeats", c.plan.repeats);
    c.plan.folds = p.value("folds", c.plan.folds);
    c.plan.val_fraction = p.value("val_fraction", c.plan.val_fraction);
    c.plan.seed = p.value("seed", c.plan.seed);
    if (p.contains("repeat_seeds"))
      c.plan.repeat_seeds = p.at("repeat_seeds").get<std::vector<std::uint64_t>>();
  }
  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    c.preprocess.threshold = p.value("threshold", c.preprocess.threshold);
    c.preprocess.margin = p.value("margin", c.preprocess.margin);
    const std::string mode = p.value("margin_mode", "box");
    if (mode == "box") c.preprocess.margin_mode = preprocess::MarginMode::BoxRelative;
    else if (mode == "image") c.preprocess.margin_mode = preprocess::MarginMode::ImageRelative;
    else throw ConfigError("preprocess.margin_mode must be 'box' or 'image'");
    if (p.contains("backend")) {
      c.backend.kind = p.at("backend").value("kind", c.backend.kind);
      c.backend.mask_dir = p.at("backend").value("mask_dir", c.backend.mask_dir);
    }
  }
  if (j.contains("prepare")) c.prepare = prepare_from_json(j.at("prepare"));
  if (j.contains("cit")) {
    const auto& p = j.at("cit");
    if (p.contains("loss")) c.cit_loss = cit::CitLossConfig::from_json(p.at("loss"));
    if (p.contains("schedule")) c.cit_schedule = cit::CitSchedule::from_json(p.at("schedule"));
    if (p.contains("generator"))
      c.generator = nn::GeneratorConfig::from_json(p.at("generator"));
    c.cit_clf_backbone = p.value("clf_backbone", c.cit_clf_backbone);
  }
  if (j.contains("classifier"))
    c.clf = classifier::ClassifierConfig::from_json(j.at("classifier"));
  if (j.contains("evaluate"))
    c.repeat_level_std = j.at("evaluate").value("repeat_level_std", false);
  if (j.contains("explain")) {
    c.explain_colormap = j.at("explain").value("colormap", c.explain_colormap);
    c.explain_alpha = j.at("explain").value("alpha", c.explain_alpha);
  }
  return c;
}

eval::ExperimentConfig RunConfig::experiment_config() const {
  eval::ExperimentConfig ec;
  ec.variant = variant;
  ec.backend = backend;
  ec.preprocess = preprocess;
  ec.prepare = prepare;
  ec.cit_loss = cit_loss;
  ec.cit_schedule = cit_schedule;
  ec.generator = generator;
  ec.cit_clf_backbone = cit_clf_backbone;
  ec.clf = clf;
  ec.repeat_level_std = repeat_level_std;
  ec.config_hash = hash();
  ec.extra_meta["exclude_normal_pcr"] = exclude_normal_pcr;
  return ec;
}

void apply_env_overrides(util::json& j, const std::vector<std::string>& env) {
  const std::string prefix = "SDNET_";
  for (const auto& entry : env) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(0, eq);
    if (key.rfind(prefix, 0) != 0) continue;
    std::string value = entry.substr(eq + 1);
    key = key.substr(prefix.size());
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return std::tolower(c); });

    // PLAN__SEED -> ["plan"]["seed"]
    util::json* node = &j;
    std::size_t pos = 0;
    while (true) {
      const auto sep = key.find("__", pos);
      const std::string part = key.substr(pos, sep == std::string::npos ? sep : sep - pos);
      if (sep == std::string::npos) {
        util::json parsed = util::json::parse(value, nullptr, /*allow_exceptions=*/false);
        (*node)[part] = parsed.is_discarded() ? util::json(value) : parsed;
        break;
      }
      node = &(*node)[part];
      pos = sep + 2;
    }
  }
}

RunConfig resolve_config(const CliOverrides& overrides) {
  util::json j = util::json::object();
  if (overrides.config_path) j = util::read_json(*overrides.config_path);

  std::vector<std::string> env;
  for (char** e = environ; *e; ++e) env.emplace_back(*e);
  apply_env_overrides(j, env);

  RunConfig config = RunConfig::from_json(j);
  if (overrides.workdir) config.workdir = *overrides.workdir;
  if (overrides.manifest) config.manifest_path = *overrides.manifest;
  if (overrides.variant) config.variant = eval::variant_from_string(*overrides.variant);
  if (overrides.exclude_normal_pcr) config.exclude_normal_pcr = *overrides.exclude_normal_pcr;
  if (overrides.seed) {
    config.plan.seed = *overrides.seed;
    config.cit_schedule.seed = *overrides.seed;
    config.clf.seed = *overrides.seed;
  }
  if (overrides.repeats) config.plan.repeats = *overrides.repeats;
  if (overrides.folds) config.plan.folds = *overrides.folds;
  return config;
}

}  // namespace sdnet::pipeline
