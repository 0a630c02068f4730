#include "sdnet/util/jsonio.hpp"

#include <fstream>

#include "sdnet/common.hpp"
#include "sdnet/util/hash.hpp"

namespace sdnet::util {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open JSON file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write JSON file: " + path.string());
  out << j.dump(2) << '\n';
}

std::string json_hash(const json& j) { return hex64(fnv1a64(j.dump())); }

}  // namespace sdnet::util
