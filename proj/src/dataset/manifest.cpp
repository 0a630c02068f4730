#include "sdnet/dataset/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include "sdnet/util/csv.hpp"
#include "sdnet/util/hash.hpp"
#include "sdnet/util/jsonio.hpp"

namespace sdnet::dataset {

namespace {

const char* kColumns[] = {"id",        "path",       "label",        "severity",
                          "rale_left", "rale_right", "pcr_positive", "view"};

[[noreturn]] void row_error(std::size_t row, const std::string& what) {
  // Row numbers are 1-based over data rows, matching what a user sees after the header.
  throw InvalidManifest("manifest row " + std::to_string(row) + ": " + what);
}

std::optional<bool> parse_optional_bool(const std::string& s, std::size_t row,
                                        const std::string& col) {
  if (s.empty()) return std::nullopt;
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  row_error(row, "column '" + col + "' must be true/false/1/0 or empty, got '" + s + "'");
}

std::optional<int> parse_optional_int(const std::string& s, std::size_t row,
                                      const std::string& col) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    row_error(row, "column '" + col + "' must be an integer or empty, got '" + s + "'");
  }
}

struct RawRow {
  std::string id, path, label, severity, rale_left, rale_right, pcr_positive, view;
};

ImageRecord validate_row(const RawRow& raw, std::size_t row) {
  ImageRecord rec;
  if (raw.id.empty()) row_error(row, "empty id");
  rec.id = raw.id;
  if (raw.path.empty()) row_error(row, "empty path");
  rec.path = raw.path;

  try {
    rec.label = class_label_from_string(raw.label);
  } catch (const InvalidManifest& e) {
    row_error(row, e.what());
  }

  if (raw.view != "PA") row_error(row, "only PA views are accepted, got '" + raw.view + "'");

  rec.pcr_positive = parse_optional_bool(raw.pcr_positive, row, "pcr_positive");

  const auto left = parse_optional_int(raw.rale_left, row, "rale_left");
  const auto right = parse_optional_int(raw.rale_right, row, "rale_right");
  if (left.has_value() != right.has_value())
    row_error(row, "rale_left and rale_right must be given together");
  if (left) {
    RaleScore rale{*left, *right};
    try {
      validate(rale);
    } catch (const InvalidRale& e) {
      row_error(row, e.what());
    }
    rec.rale = rale;
  }

  std::optional<SeverityLevel> stated;
  if (!raw.severity.empty()) {
    try {
      stated = severity_from_string(raw.severity);
    } catch (const InvalidManifest& e) {
      row_error(row, e.what());
    }
  }

  if (rec.label == ClassLabel::N) {
    if (stated && *stated != SeverityLevel::NegativeControl)
      row_error(row, "severity '" + raw.severity + "' is not valid for a class-N record");
    rec.severity = SeverityLevel::NegativeControl;
    return rec;
  }

  // Class P: severity must be stated, derivable from RALE, or both (consistent).
  std::optional<SeverityLevel> derived;
  if (rec.rale) {
    try {
      derived = severity_from_rale(*rec.rale, rec.pcr_positive.value_or(false));
    } catch (const InvalidCombination& e) {
      row_error(row, e.what());
    }
  }
  if (stated && *stated == SeverityLevel::NegativeControl)
    row_error(row, "negative_control severity is not valid for a class-P record");
  if (stated && derived && *stated != *derived)
    row_error(row, std::string("stated severity '") + to_string(*stated) +
                       "' does not match RALE-derived '" + to_string(*derived) + "'");
  if (!stated && !derived)
    row_error(row, "class-P record needs a severity or a RALE score to derive one");
  rec.severity = stated ? *stated : *derived;
  return rec;
}

void check_duplicates_and_files(DatasetManifest& manifest, const LoadOptions& options) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& rec = manifest.records[i];
    if (!seen.insert(rec.id).second)
      row_error(i + 1, "duplicate id '" + rec.id + "'");
    if (options.verify_files && !std::filesystem::exists(manifest.resolve_path(rec)))
      row_error(i + 1, "image file not found: " + manifest.resolve_path(rec));
  }
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& csv_path, const LoadOptions& options) {
  if (!std::filesystem::exists(csv_path))
    throw InvalidManifest("manifest file not found: " + csv_path.string());
  const auto table = util::read_csv(csv_path);

  int idx[8];
  for (int c = 0; c < 8; ++c) {
    idx[c] = table.column(kColumns[c]);
    if (idx[c] < 0)
      throw InvalidManifest("manifest is missing required column '" + std::string(kColumns[c]) + "'");
  }

  DatasetManifest manifest;
  manifest.root = options.root.value_or(csv_path.parent_path().string());
  manifest.records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() < table.header.size())
      row_error(r + 1, "expected " + std::to_string(table.header.size()) + " fields, got " +
                           std::to_string(row.size()));
    RawRow raw{row[idx[0]], row[idx[1]], row[idx[2]], row[idx[3]],
               row[idx[4]], row[idx[5]], row[idx[6]], row[idx[7]]};
    manifest.records.push_back(validate_row(raw, r + 1));
  }
  check_duplicates_and_files(manifest, options);
  return manifest;
}

DatasetManifest load_manifest_jsonl(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::exists(path))
    throw InvalidManifest("manifest file not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw InvalidManifest("cannot open manifest: " + path.string());

  DatasetManifest manifest;
  manifest.root = options.root.value_or(path.parent_path().string());
  std::string line;
  std::size_t r = 0;
  auto str_or_empty = [](const util::json& j, const char* key) -> std::string {
    if (!j.contains(key) || j.at(key).is_null()) return "";
    const auto& v = j.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw InvalidManifest("unsupported JSON value for key '" + std::string(key) + "'");
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++r;
    util::json j;
    try {
      j = util::json::parse(line);
    } catch (const util::json::parse_error& e) {
      row_error(r, std::string("invalid JSON: ") + e.what());
    }
    RawRow raw;
    try {
      raw = RawRow{str_or_empty(j, "id"),        str_or_empty(j, "path"),
                   str_or_empty(j, "label"),     str_or_empty(j, "severity"),
                   str_or_empty(j, "rale_left"), str_or_empty(j, "rale_right"),
                   str_or_empty(j, "pcr_positive"), str_or_empty(j, "view")};
    } catch (const InvalidManifest& e) {
      row_error(r, e.what());
    }
    manifest.records.push_back(validate_row(raw, r));
  }
  check_duplicates_and_files(manifest, options);
  return manifest;
}

void save_manifest_csv(const std::filesystem::path& path, const DatasetManifest& manifest) {
  util::CsvTable table;
  table.header = {"id", "path", "label", "severity", "rale_left", "rale_right", "pcr_positive", "view"};
  for (const auto& rec : manifest.records) {
    std::vector<std::string> row(8);
    row[0] = rec.id;
    row[1] = rec.path;
    row[2] = to_string(rec.label);
    row[3] = to_string(rec.severity);
    if (rec.rale) {
      row[4] = std::to_string(rec.rale->left_lung);
      row[5] = std::to_string(rec.rale->right_lung);
    }
    if (rec.pcr_positive) row[6] = *rec.pcr_positive ? "true" : "false";
    row[7] = "PA";
    table.rows.push_back(std::move(row));
  }
  util::write_csv(path, table);
}

DatasetManifest exclude_normal_pcr(const DatasetManifest& manifest) {
  DatasetManifest out;
  out.root = manifest.root;
  for (const auto& rec : manifest.records)
    if (rec.severity != SeverityLevel::NormalPcrPlus) out.records.push_back(rec);
  return out;
}

std::string manifest_hash(const DatasetManifest& manifest) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& rec : manifest.records) {
    h = util::fnv1a64(rec.id.data(), rec.id.size(), h);
    h = util::fnv1a64(rec.path.data(), rec.path.size(), h);
    const char* label = to_string(rec.label);
    h = util::fnv1a64(label, 1, h);
  }
  return util::hex64(h);
}

}  // namespace sdnet::dataset
