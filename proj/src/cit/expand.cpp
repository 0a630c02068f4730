#include "sdnet/cit/expand.hpp"

#include <opencv2/imgcodecs.hpp>

#include "sdnet/util/csv.hpp"

namespace sdnet::cit {

std::pair<nn::Tensor, nn::Tensor> transform_pair(const GeneratorPair& gens,
                                                 const nn::Tensor& prepared) {
  nn::Var x = nn::make_leaf(prepared.reshaped(
      {1, prepared.shape(0), prepared.shape(1), prepared.shape(2)}));
  nn::Tensor plus = gens.gen_p.forward(x, false)->value;
  nn::Tensor minus = gens.gen_n.forward(x, false)->value;
  const std::vector<int> chw{prepared.shape(0), prepared.shape(1), prepared.shape(2)};
  return {plus.reshaped(chw), minus.reshaped(chw)};
}

ExpandedManifest expand_dataset(const dataset::DatasetManifest& manifest,
                                const GeneratorPair& gens,
                                const preprocess::PrepareSettings& prepare,
                                const std::filesystem::path& out_dir,
                                const ImageSource& source) {
  std::filesystem::create_directories(out_dir);
  ExpandedManifest out;
  out.root = out_dir.string();
  out.records.reserve(manifest.records.size() * 2);

  for (const auto& rec : manifest.records) {
    const cv::Mat image = source(rec);
    const nn::Tensor prepared = preprocess::prepare_image(image, prepare);
    const auto [plus, minus] = transform_pair(gens, prepared);

    for (const bool is_plus : {true, false}) {
      ExpandedRecord er;
      er.source_id = rec.id;
      er.plus = is_plus;
      er.label4 = transformed_label(rec.label, is_plus);
      er.path = rec.id + (is_plus ? "_plus.png" : "_minus.png");
      cv::imwrite((out_dir / er.path).string(),
                  preprocess::tensor_to_image(is_plus ? plus : minus, prepare));
      out.records.push_back(std::move(er));
    }
  }
  return out;
}

void save_expanded_csv(const std::filesystem::path& path, const ExpandedManifest& manifest) {
  util::CsvTable table;
  table.header = {"source_id", "transform", "label4", "path"};
  for (const auto& rec : manifest.records)
    table.rows.push_back(
        {rec.source_id, rec.plus ? "plus" : "minus", to_string(rec.label4), rec.path});
  util::write_csv(path, table);
}

ExpandedManifest load_expanded_csv(const std::filesystem::path& path) {
  const auto table = util::read_csv(path);
  const int id_col = table.column("source_id");
  const int tf_col = table.column("transform");
  const int label_col = table.column("label4");
  const int path_col = table.column("path");
  if (id_col < 0 || tf_col < 0 || label_col < 0 || path_col < 0)
    throw Error("expanded manifest is missing a required column");

  ExpandedManifest out;
  out.root = path.parent_path().string();
  for (const auto& row : table.rows) {
    ExpandedRecord rec;
    rec.source_id = row[id_col];
    rec.plus = row[tf_col] == "plus";
    rec.label4 = class4_from_string(row[label_col]);
    rec.path = row[path_col];
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace sdnet::cit
