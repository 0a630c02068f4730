#pragma once

#include <filesystem>
#include <map>

#include "sdnet/nn/layers.hpp"

namespace sdnet::nn {

SDNET_DEFINE_ERROR(CheckpointMissing);

/// Binary tensor archive ("SDNT1"): count, then (name, dims, f64 data) records.
/// Little-endian, as produced on the training host.
void save_tensors(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, const Tensor*>>& tensors);

std::map<std::string, Tensor> load_tensors(const std::filesystem::path& path);

void save_state(const std::filesystem::path& path, ModelState& state);

/// Loads parameters and buffers by name with shape checks. Every state entry
/// must be present in the archive.
void load_state(const std::filesystem::path& path, ModelState& state);

/// Loads only the names present in both archive and state (transfer-weight
/// initialization of a backbone under a fresh head). Shape mismatches still
/// throw. Returns the number of tensors loaded.
int load_state_overlap(const std::filesystem::path& path, ModelState& state);

/// Deep copy of all parameter and buffer values (best-epoch snapshots).
std::vector<Tensor> snapshot(const ModelState& state);
void restore(ModelState& state, const std::vector<Tensor>& snap);

}  // namespace sdnet::nn
