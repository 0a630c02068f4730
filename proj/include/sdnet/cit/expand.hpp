#pragma once

#include <functional>

#include "sdnet/cit/classes4.hpp"
#include "sdnet/cit/train.hpp"
#include "sdnet/dataset/manifest.hpp"
#include "sdnet/preprocess/image_ops.hpp"

namespace sdnet::cit {

struct ExpandedRecord {
  std::string source_id;
  bool plus = false;  // G_P output when true, G_N output otherwise
  Class4 label4 = Class4::NMinus;
  std::string path;  // relative to the expanded manifest root
};

struct ExpandedManifest {
  std::string root;
  std::vector<ExpandedRecord> records;
};

/// Applies both generators to one prepared image: (x_plus, x_minus).
std::pair<nn::Tensor, nn::Tensor> transform_pair(const GeneratorPair& gens,
                                                 const nn::Tensor& prepared);

using ImageSource = std::function<cv::Mat(const dataset::ImageRecord&)>;

/// Runs every manifest record through G_P and G_N and writes the two
/// transformed images plus an index CSV under `out_dir`. Exactly 2n outputs,
/// labels P->(P+,P-), N->(N+,N-).
ExpandedManifest expand_dataset(const dataset::DatasetManifest& manifest,
                                const GeneratorPair& gens,
                                const preprocess::PrepareSettings& prepare,
                                const std::filesystem::path& out_dir,
                                const ImageSource& source);

void save_expanded_csv(const std::filesystem::path& path, const ExpandedManifest& manifest);
ExpandedManifest load_expanded_csv(const std::filesystem::path& path);

}  // namespace sdnet::cit
