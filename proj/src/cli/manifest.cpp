#include "acm/cli/manifest.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "acm/core/error.hpp"

namespace acm::cli {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return sha256_hex(bytes.str());
}

std::string Manifest::to_json() const {
  auto files = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : paths) out.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    return out;
  };
  const nlohmann::json doc = {{"command", command},  {"config_hash", config_hash},
                              {"seed", seed},        {"inputs", files(inputs)},
                              {"outputs", files(outputs)}};
  return doc.dump(2) + "\n";
}

void Manifest::write(const std::filesystem::path& path) const {
  const std::string text = to_json();
  std::ofstream out(path, std::ios::binary);
  if (!(out << text)) throw DataError("cannot write " + path.string());
}

RunLock::RunLock(std::filesystem::path path) : path_(std::move(path)) {
  fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd_ < 0) {
    if (errno == EEXIST) {
      throw Error("output is locked by another run (" + path_.string() + ")");
    }
    throw Error("cannot create lock " + path_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd_, pid.data(), pid.size());
}

RunLock::~RunLock() {
  if (fd_ >= 0) {
    ::close(fd_);
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

}  // namespace acm::cli
