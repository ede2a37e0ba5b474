#include "acm/core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "acm/core/error.hpp"

namespace acm::core {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return static_cast<std::size_t>(in.gcount()) == sizeof(T);
}

}  // namespace

void write_checkpoint(std::ostream& out, const TensorMap& tensors) {
  out.write(kCheckpointMagic, 4);
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& [name, t] : tensors) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_pod<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
}

TensorMap read_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw DataError("not a checkpoint: bad magic");
  }
  std::uint32_t version = 0;
  if (!read_pod(in, version)) throw DataError("truncated checkpoint header");
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  TensorMap out;
  for (;;) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (in.gcount() == 0) break;
    if (in.gcount() != sizeof(name_len)) throw DataError("truncated checkpoint record");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint32_t rank = 0;
    if (static_cast<std::uint32_t>(in.gcount()) != name_len || !read_pod(in, rank)) {
      throw DataError("truncated checkpoint record");
    }
    Shape shape(rank);
    for (auto& d : shape) {
      std::uint64_t v = 0;
      if (!read_pod(in, v)) throw DataError("truncated checkpoint dims for " + name);
      d = static_cast<std::size_t>(v);
    }
    std::vector<double> data(shape_size(shape));
    const auto bytes = static_cast<std::streamsize>(data.size() * sizeof(double));
    in.read(reinterpret_cast<char*>(data.data()), bytes);
    if (in.gcount() != bytes) throw DataError("truncated checkpoint payload for " + name);
    if (!out.emplace(name, Tensor(std::move(shape), std::move(data))).second) {
      throw DataError("duplicate tensor in checkpoint: " + name);
    }
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, tensors);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

TensorMap load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void put_meta(TensorMap& tensors, const std::string& key, double value) {
  tensors.insert_or_assign("meta/" + key, Tensor::scalar(value));
}

double get_meta(const TensorMap& tensors, const std::string& key) {
  auto it = tensors.find("meta/" + key);
  if (it == tensors.end()) throw DataError("checkpoint lacks metadata '" + key + "'");
  return it->second.item();
}

}  // namespace acm::core
