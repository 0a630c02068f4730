#pragma once

#include <filesystem>
#include <json.hpp>

namespace sdnet::util {

using json = nlohmann::json;

json read_json(const std::filesystem::path& path);

/// Writes `j` with 2-space indentation and a trailing newline. nlohmann keeps
/// object keys sorted, so identical values serialize byte-identically.
void write_json(const std::filesystem::path& path, const json& j);

/// Canonical config fingerprint: FNV-1a 64 of the compact dump.
std::string json_hash(const json& j);

}  // namespace sdnet::util
