#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

namespace fracvolt::cli {

inline constexpr const char* kVersion = "0.1.0";

inline std::string sha256_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 init failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

/// Collects output files and writes manifest.json listing each with its hash.
class Manifest {
 public:
  Manifest(std::filesystem::path dir, std::string command, nlohmann::json config)
      : dir_(std::move(dir)), command_(std::move(command)), config_(std::move(config)) {}

  void add(const std::filesystem::path& file) { files_.push_back(file); }

  std::filesystem::path write() const {
    nlohmann::json j;
    j["tool"] = "fracvolt";
    j["version"] = kVersion;
    j["command"] = command_;
    j["config"] = config_;
    j["files"] = nlohmann::json::array();
    for (const auto& f : files_) {
      j["files"].push_back({{"path", std::filesystem::relative(f, dir_).generic_string()},
                            {"bytes", std::filesystem::file_size(f)},
                            {"sha256", sha256_file(f)}});
    }
    const auto out = dir_ / "manifest.json";
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out.string());
    os << j.dump(2) << '\n';
    return out;
  }

 private:
  std::filesystem::path dir_;
  std::string command_;
  nlohmann::json config_;
  std::vector<std::filesystem::path> files_;
};

}  // namespace fracvolt::cli
