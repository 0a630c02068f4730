#include "sdnet/dataset/cv_plan.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "sdnet/util/rng.hpp"

namespace sdnet::dataset {

const FoldAssignment& CvPlan::at(int repeat, int fold) const {
  for (const auto& a : assignments)
    if (a.repeat == repeat && a.fold == fold) return a;
  throw Error("no assignment for repeat " + std::to_string(repeat) + " fold " +
              std::to_string(fold));
}

util::json CvPlan::to_json() const {
  util::json j;
  j["repeats"] = repeats;
  j["folds"] = folds;
  j["seed"] = seed;
  if (!repeat_seeds.empty()) j["repeat_seeds"] = repeat_seeds;
  j["assignments"] = util::json::array();
  for (const auto& a : assignments) {
    j["assignments"].push_back({{"repeat", a.repeat},
                                {"fold", a.fold},
                                {"train", a.train},
                                {"val", a.val},
                                {"test", a.test}});
  }
  return j;
}

CvPlan CvPlan::from_json(const util::json& j) {
  CvPlan plan;
  plan.repeats = j.at("repeats").get<int>();
  plan.folds = j.at("folds").get<int>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("repeat_seeds")) plan.repeat_seeds = j.at("repeat_seeds").get<std::vector<std::uint64_t>>();
  for (const auto& a : j.at("assignments")) {
    FoldAssignment fa;
    fa.repeat = a.at("repeat").get<int>();
    fa.fold = a.at("fold").get<int>();
    fa.train = a.at("train").get<std::vector<std::string>>();
    fa.val = a.at("val").get<std::vector<std::string>>();
    fa.test = a.at("test").get<std::vector<std::string>>();
    plan.assignments.push_back(std::move(fa));
  }
  return plan;
}

namespace {

// Emits ids in manifest order so plan files are stable and readable.
std::vector<std::string> ordered(const std::vector<std::string>& all_ids,
                                 const std::unordered_set<std::string>& pick) {
  std::vector<std::string> out;
  out.reserve(pick.size());
  for (const auto& id : all_ids)
    if (pick.count(id)) out.push_back(id);
  return out;
}

}  // namespace

CvPlan make_cv_plan(const DatasetManifest& manifest, const CvPlanOptions& options) {
  if (options.folds < 2) throw Error("folds must be >= 2");
  if (options.repeats < 1) throw Error("repeats must be >= 1");
  if (!options.repeat_seeds.empty() &&
      options.repeat_seeds.size() != static_cast<std::size_t>(options.repeats))
    throw Error("repeat_seeds must have one entry per repeat");

  std::vector<std::string> all_ids;
  std::unordered_map<std::string, std::vector<std::string>> by_class;
  for (const auto& rec : manifest.records) {
    all_ids.push_back(rec.id);
    by_class[to_string(rec.label)].push_back(rec.id);
  }
  for (const char* cls : {"N", "P"}) {
    const auto it = by_class.find(cls);
    const std::size_t count = it == by_class.end() ? 0 : it->second.size();
    if (count < static_cast<std::size_t>(options.folds))
      throw InsufficientData("class " + std::string(cls) + " has " + std::to_string(count) +
                             " records, fewer than " + std::to_string(options.folds) + " folds");
  }

  CvPlan plan;
  plan.repeats = options.repeats;
  plan.folds = options.folds;
  plan.seed = options.seed;
  plan.repeat_seeds = options.repeat_seeds;

  const int folds = options.folds;
  for (int r = 0; r < options.repeats; ++r) {
    util::Rng rng = options.repeat_seeds.empty()
                        ? util::Rng(options.seed, static_cast<std::uint64_t>(r))
                        : util::Rng(options.repeat_seeds[r], static_cast<std::uint64_t>(r));

    // Per class: shuffle, then chunk contiguously; the first (n mod folds)
    // chunks take the extra record, so fold sizes differ by at most one.
    std::vector<std::unordered_set<std::string>> test_sets(folds);
    for (const char* cls : {"N", "P"}) {
      std::vector<std::string> ids = by_class[cls];
      rng.shuffle(ids);
      const std::size_t n = ids.size();
      const std::size_t base = n / folds;
      const std::size_t extra = n % folds;
      std::size_t pos = 0;
      for (int f = 0; f < folds; ++f) {
        const std::size_t take = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        for (std::size_t k = 0; k < take; ++k) test_sets[f].insert(ids[pos++]);
      }
    }

    for (int f = 0; f < folds; ++f) {
      FoldAssignment fa;
      fa.repeat = r;
      fa.fold = f;
      fa.test = ordered(all_ids, test_sets[f]);

      std::vector<std::string> train_portion;
      for (const auto& id : all_ids)
        if (!test_sets[f].count(id)) train_portion.push_back(id);

      const std::size_t val_n = std::max<std::size_t>(
          1, static_cast<std::size_t>(round_half_up(options.val_fraction *
                                                    static_cast<double>(train_portion.size()))));
      std::vector<std::string> pool = train_portion;
      rng.shuffle(pool);
      std::unordered_set<std::string> val_set(pool.begin(), pool.begin() + val_n);

      fa.val = ordered(all_ids, val_set);
      for (const auto& id : train_portion)
        if (!val_set.count(id)) fa.train.push_back(id);
      plan.assignments.push_back(std::move(fa));
    }
  }
  return plan;
}

}  // namespace sdnet::dataset
