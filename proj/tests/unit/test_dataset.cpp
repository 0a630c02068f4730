#include <doctest.h>

#include <map>
#include <set>

#include "sdnet/dataset/cv_plan.hpp"
#include "sdnet/dataset/manifest.hpp"
#include "support/tmpdir.hpp"

using namespace sdnet;
using namespace sdnet::dataset;

namespace {

const char* kHeader = "id,path,label,severity,rale_left,rale_right,pcr_positive,view\n";

/// Builds an in-memory manifest without touching the filesystem.
DatasetManifest synthetic_manifest(int n_p, int n_n) {
  DatasetManifest m;
  for (int i = 0; i < n_p; ++i) {
    ImageRecord r;
    r.id = "p" + std::to_string(i);
    r.path = r.id + ".png";
    r.label = ClassLabel::P;
    r.severity = SeverityLevel::Moderate;
    m.records.push_back(r);
  }
  for (int i = 0; i < n_n; ++i) {
    ImageRecord r;
    r.id = "n" + std::to_string(i);
    r.path = r.id + ".png";
    r.label = ClassLabel::N;
    m.records.push_back(r);
  }
  return m;
}

}  // namespace

TEST_CASE("severity_from_rale maps the score bands") {
  CHECK(severity_from_rale({0, 0}, true) == SeverityLevel::NormalPcrPlus);
  CHECK(severity_from_rale({1, 0}, true) == SeverityLevel::Mild);
  CHECK(severity_from_rale({1, 1}, false) == SeverityLevel::Mild);
  CHECK(severity_from_rale({2, 2}, true) == SeverityLevel::Moderate);
  CHECK(severity_from_rale({2, 1}, false) == SeverityLevel::Moderate);
  CHECK(severity_from_rale({4, 4}, true) == SeverityLevel::Severe);
  CHECK(severity_from_rale({3, 3}, false) == SeverityLevel::Severe);
  CHECK_THROWS_AS(severity_from_rale({5, 0}, true), InvalidRale);
  CHECK_THROWS_AS(severity_from_rale({0, -1}, true), InvalidRale);
  CHECK_THROWS_AS(severity_from_rale({0, 0}, false), InvalidCombination);
}

TEST_CASE("severity_from_rale is monotone in the total") {
  int prev = -1;
  for (int total = 0; total <= 8; ++total) {
    for (int left = 0; left <= 4; ++left) {
      const int right = total - left;
      if (right < 0 || right > 4) continue;
      const auto sev = severity_from_rale({left, right}, true);
      CHECK(static_cast<int>(sev) >= prev);
      if (right == total - left) prev = std::max(prev, static_cast<int>(sev));
    }
  }
}

TEST_CASE("load_manifest accepts a valid file and resolves severities") {
  testsupport::TmpDir tmp;
  tmp.touch("img/a.png");
  tmp.touch("img/b.png");
  tmp.touch("img/c.png");
  const auto csv = tmp.write("manifest.csv",
                             std::string(kHeader) +
                                 "a,img/a.png,P,,2,2,true,PA\n"
                                 "b,img/b.png,N,,,,false,PA\n"
                                 "c,img/c.png,P,severe,4,3,true,PA\n");
  const auto m = load_manifest(csv);
  REQUIRE(m.n() == 3);
  CHECK(m.records[0].severity == SeverityLevel::Moderate);
  CHECK(m.records[1].severity == SeverityLevel::NegativeControl);
  CHECK(m.records[2].severity == SeverityLevel::Severe);
  CHECK(m.count(ClassLabel::P) == 2);
}

TEST_CASE("load_manifest handles the empty case") {
  testsupport::TmpDir tmp;
  const auto csv = tmp.write("manifest.csv", kHeader);
  CHECK(load_manifest(csv).n() == 0);
}

TEST_CASE("load_manifest rejects bad rows with the row number") {
  testsupport::TmpDir tmp;
  tmp.touch("a.png");
  tmp.touch("b.png");

  SUBCASE("duplicate id") {
    const auto csv = tmp.write("m.csv", std::string(kHeader) +
                                            "a,a.png,N,,,,,PA\n"
                                            "a,b.png,N,,,,,PA\n");
    CHECK_THROWS_WITH_AS(load_manifest(csv), doctest::Contains("row 2"), InvalidManifest);
  }
  SUBCASE("missing column") {
    const auto csv = tmp.write("m.csv", "id,path,label,view\na,a.png,N,PA\n");
    CHECK_THROWS_WITH_AS(load_manifest(csv), doctest::Contains("missing required column"),
                         InvalidManifest);
  }
  SUBCASE("non-PA view") {
    const auto csv = tmp.write("m.csv", std::string(kHeader) + "a,a.png,N,,,,,AP\n");
    CHECK_THROWS_AS(load_manifest(csv), InvalidManifest);
  }
  SUBCASE("severity/label mismatch") {
    const auto csv = tmp.write("m.csv", std::string(kHeader) + "a,a.png,N,mild,,,,PA\n");
    CHECK_THROWS_AS(load_manifest(csv), InvalidManifest);
  }
  SUBCASE("stated severity contradicts RALE") {
    const auto csv = tmp.write("m.csv", std::string(kHeader) + "a,a.png,P,mild,4,4,true,PA\n");
    CHECK_THROWS_AS(load_manifest(csv), InvalidManifest);
  }
  SUBCASE("per-lung RALE out of range") {
    const auto csv = tmp.write("m.csv", std::string(kHeader) + "a,a.png,P,,5,0,true,PA\n");
    CHECK_THROWS_AS(load_manifest(csv), InvalidManifest);
  }
  SUBCASE("missing image file") {
    const auto csv = tmp.write("m.csv", std::string(kHeader) + "a,zzz.png,N,,,,,PA\n");
    CHECK_THROWS_AS(load_manifest(csv), InvalidManifest);
  }
}

TEST_CASE("jsonl loader matches the CSV schema") {
  testsupport::TmpDir tmp;
  tmp.touch("a.png");
  const auto path = tmp.write(
      "m.jsonl", R"({"id":"a","path":"a.png","label":"P","rale_left":2,"rale_right":0,)"
                 R"("pcr_positive":true,"view":"PA"})"
                 "\n");
  const auto m = load_manifest_jsonl(path);
  REQUIRE(m.n() == 1);
  CHECK(m.records[0].severity == SeverityLevel::Mild);
}

TEST_CASE("exclude_normal_pcr drops exactly those records") {
  auto m = synthetic_manifest(4, 4);
  m.records[0].severity = SeverityLevel::NormalPcrPlus;
  m.records[2].severity = SeverityLevel::NormalPcrPlus;
  const auto filtered = exclude_normal_pcr(m);
  CHECK(filtered.n() == 6);
  for (const auto& rec : filtered.records) CHECK(rec.severity != SeverityLevel::NormalPcrPlus);
}

TEST_CASE("cv plan: 10+10 with 5 folds gives 2+2 test folds") {
  const auto m = synthetic_manifest(10, 10);
  CvPlanOptions opt;
  opt.repeats = 1;
  opt.folds = 5;
  opt.seed = 11;
  const auto plan = make_cv_plan(m, opt);
  REQUIRE(plan.assignments.size() == 5);
  for (const auto& fa : plan.assignments) {
    int p = 0, n = 0;
    for (const auto& id : fa.test) (id[0] == 'p' ? p : n)++;
    CHECK(p == 2);
    CHECK(n == 2);
  }
}

TEST_CASE("cv plan: 426+426 partitions into folds of 85/86 per class") {
  const auto m = synthetic_manifest(426, 426);
  CvPlanOptions opt;
  opt.repeats = 1;
  opt.folds = 5;
  opt.seed = 5;
  const auto plan = make_cv_plan(m, opt);
  std::multiset<int> p_sizes;
  int total_p = 0;
  for (const auto& fa : plan.assignments) {
    int p = 0;
    for (const auto& id : fa.test)
      if (id[0] == 'p') ++p;
    p_sizes.insert(p);
    total_p += p;
  }
  CHECK(total_p == 426);
  // 426 = 86 + 85 + 85 + 85 + 85
  CHECK(p_sizes == std::multiset<int>{85, 85, 85, 85, 86});
}

TEST_CASE("cv plan: 25 triples, partition, disjointness, val sizing") {
  const auto m = synthetic_manifest(30, 25);
  CvPlanOptions opt;
  opt.repeats = 5;
  opt.folds = 5;
  opt.seed = 3;
  const auto plan = make_cv_plan(m, opt);
  REQUIRE(plan.assignments.size() == 25);

  for (int r = 0; r < 5; ++r) {
    std::multiset<std::string> test_union;
    for (int f = 0; f < 5; ++f) {
      const auto& fa = plan.at(r, f);
      std::set<std::string> train(fa.train.begin(), fa.train.end());
      std::set<std::string> val(fa.val.begin(), fa.val.end());
      std::set<std::string> test(fa.test.begin(), fa.test.end());
      CHECK(train.size() == fa.train.size());
      CHECK(val.size() == fa.val.size());
      CHECK(test.size() == fa.test.size());
      for (const auto& id : val) CHECK(!train.count(id));
      for (const auto& id : test) {
        CHECK(!train.count(id));
        CHECK(!val.count(id));
      }
      // val = max(1, round_half_up(0.10 * train portion))
      const std::size_t portion = fa.train.size() + fa.val.size();
      CHECK(fa.val.size() ==
            std::max<std::size_t>(1, static_cast<std::size_t>(round_half_up(0.10 * portion))));
      test_union.insert(fa.test.begin(), fa.test.end());
    }
    CHECK(test_union.size() == m.n());
    for (const auto& rec : m.records) CHECK(test_union.count(rec.id) == 1);
  }
}

TEST_CASE("cv plan is deterministic and serializable") {
  const auto m = synthetic_manifest(12, 12);
  CvPlanOptions opt;
  opt.repeats = 2;
  opt.folds = 3;
  opt.seed = 99;
  const auto a = make_cv_plan(m, opt);
  const auto b = make_cv_plan(m, opt);
  CHECK(a.to_json().dump() == b.to_json().dump());

  const auto round_trip = CvPlan::from_json(a.to_json());
  CHECK(round_trip.to_json().dump() == a.to_json().dump());

  opt.seed = 100;
  const auto c = make_cv_plan(m, opt);
  CHECK(a.to_json().dump() != c.to_json().dump());
}

TEST_CASE("cv plan refuses classes smaller than the fold count") {
  const auto m = synthetic_manifest(3, 10);
  CvPlanOptions opt;
  opt.folds = 5;
  CHECK_THROWS_AS(make_cv_plan(m, opt), InsufficientData);
}
