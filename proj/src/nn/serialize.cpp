#include "sdnet/nn/serialize.hpp"

#include <cstring>
#include <fstream>

namespace sdnet::nn {

namespace {

constexpr char kMagic[6] = {'S', 'D', 'N', 'T', '1', '\n'};

template <class T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const std::filesystem::path& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("truncated tensor archive: " + path.string());
  return v;
}

}  // namespace

void save_tensors(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write tensor archive: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t->ndim()));
    for (int d = 0; d < t->ndim(); ++d) write_pod<std::int64_t>(out, t->shape(d));
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(t->size() * sizeof(Scalar)));
  }
  if (!out) throw Error("failed while writing tensor archive: " + path.string());
}

std::map<std::string, Tensor> load_tensors(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw CheckpointMissing("checkpoint not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointMissing("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("not a tensor archive: " + path.string());

  std::map<std::string, Tensor> out;
  const auto count = read_pod<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto ndim = read_pod<std::uint32_t>(in, path);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(read_pod<std::int64_t>(in, path));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(Scalar)));
    if (!in) throw Error("truncated tensor archive: " + path.string());
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

void save_state(const std::filesystem::path& path, ModelState& state) {
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (const auto& [name, var] : state.params) tensors.emplace_back(name, &var->value);
  for (const auto& [name, buf] : state.buffers) tensors.emplace_back(name, buf);
  save_tensors(path, tensors);
}

void load_state(const std::filesystem::path& path, ModelState& state) {
  auto archive = load_tensors(path);
  auto take = [&](const std::string& name, Tensor& dst) {
    const auto it = archive.find(name);
    if (it == archive.end())
      throw Error("checkpoint " + path.string() + " is missing tensor '" + name + "'");
    if (!it->second.same_shape(dst))
      throw ShapeMismatch("checkpoint tensor '" + name + "' has shape " +
                          it->second.shape_str() + ", expected " + dst.shape_str());
    dst = it->second;
  };
  for (auto& [name, var] : state.params) take(name, var->value);
  for (auto& [name, buf] : state.buffers) take(name, *buf);
}

int load_state_overlap(const std::filesystem::path& path, ModelState& state) {
  auto archive = load_tensors(path);
  int loaded = 0;
  auto maybe_take = [&](const std::string& name, Tensor& dst) {
    const auto it = archive.find(name);
    if (it == archive.end()) return;
    if (!it->second.same_shape(dst))
      throw ShapeMismatch("checkpoint tensor '" + name + "' has shape " +
                          it->second.shape_str() + ", expected " + dst.shape_str());
    dst = it->second;
    ++loaded;
  };
  for (auto& [name, var] : state.params) maybe_take(name, var->value);
  for (auto& [name, buf] : state.buffers) maybe_take(name, *buf);
  return loaded;
}

std::vector<Tensor> snapshot(const ModelState& state) {
  std::vector<Tensor> snap;
  snap.reserve(state.params.size() + state.buffers.size());
  for (const auto& [_, var] : state.params) snap.push_back(var->value);
  for (const auto& [_, buf] : state.buffers) snap.push_back(*buf);
  return snap;
}

void restore(ModelState& state, const std::vector<Tensor>& snap) {
  if (snap.size() != state.params.size() + state.buffers.size())
    throw Error("snapshot size does not match model state");
  std::size_t i = 0;
  for (auto& [_, var] : state.params) var->value = snap[i++];
  for (auto& [_, buf] : state.buffers) *buf = snap[i++];
}

}  // namespace sdnet::nn
