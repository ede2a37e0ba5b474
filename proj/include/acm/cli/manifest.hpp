#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace acm::cli {

std::string sha256_hex(std::string_view bytes);
/// Throws DataError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// Provenance record written next to every command's outputs:
///   {"command", "config_hash", "seed", "inputs": [{path, sha256}], "outputs": [...]}
struct Manifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  /// Hashes the listed files now.
  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// Exclusive claim on an output location, held until destruction. Throws
/// Error when another process holds it.
class RunLock {
 public:
  explicit RunLock(std::filesystem::path path);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

}  // namespace acm::cli
