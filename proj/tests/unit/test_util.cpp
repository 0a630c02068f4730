#include <doctest.h>

#include "sdnet/util/csv.hpp"
#include "sdnet/util/hash.hpp"
#include "sdnet/util/rng.hpp"

using namespace sdnet;

TEST_CASE("csv splits quoted fields") {
  auto fields = util::split_csv_line(R"(a,"b,c","say ""hi""",)");
  REQUIRE(fields.size() == 4);
  CHECK(fields[0] == "a");
  CHECK(fields[1] == "b,c");
  CHECK(fields[2] == "say \"hi\"");
  CHECK(fields[3] == "");
}

TEST_CASE("csv escape round-trips") {
  const std::string nasty = "a,\"b\"\nc";
  auto fields = util::split_csv_line(util::csv_escape(nasty));
  REQUIRE(fields.size() == 1);
  CHECK(fields[0] == nasty);
}

TEST_CASE("rng is deterministic per (seed, stream)") {
  util::Rng a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  util::Rng a2(42, 1);
  for (int i = 0; i < 100; ++i) differs |= a2.next_u64() != c.next_u64();
  CHECK(differs);
}

TEST_CASE("rng shuffle is a permutation") {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  util::Rng rng(7);
  auto shuffled = v;
  rng.shuffle(shuffled);
  CHECK(shuffled != v);
  std::sort(shuffled.begin(), shuffled.end());
  CHECK(shuffled == v);
}

TEST_CASE("rng uniform stays in range") {
  util::Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.uniform_u64(7) < 7);
  }
}

TEST_CASE("fnv1a64 matches reference vectors") {
  // Published FNV-1a test vectors.
  CHECK(util::fnv1a64(std::string("")) == 0xcbf29ce484222325ull);
  CHECK(util::fnv1a64(std::string("a")) == 0xaf63dc4c8601ec8cull);
  CHECK(util::hex64(0xdeadbeefull) == "00000000deadbeef");
}
