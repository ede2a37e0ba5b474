#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "acm/core/tensor.hpp"

namespace acm::core {

inline constexpr char kCheckpointMagic[4] = {'A', 'C', 'M', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Ordered name → tensor records as stored on disk.
using TensorMap = std::map<std::string, Tensor>;

/// Binary layout, all integers little-endian:
///   "ACMT" | u32 version | records...
///   record: u32 name_len | name bytes | u32 rank | u64 dims[rank] | f64 data[...]
void save_checkpoint(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap load_checkpoint(const std::filesystem::path& path);

void write_checkpoint(std::ostream& out, const TensorMap& tensors);
TensorMap read_checkpoint(std::istream& in);

/// Scalar metadata is stored as a rank-0 tensor named "meta/<key>".
void put_meta(TensorMap& tensors, const std::string& key, double value);
double get_meta(const TensorMap& tensors, const std::string& key);

}  // namespace acm::core
