#include "csprobe/manifest.hpp"

#include <array>
#include <fstream>

#include <openssl/evp.h>

#include "csprobe/error.hpp"

namespace csprobe {
namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      EVP_MD_CTX_free(ctx_);
      throw Error(ErrorKind::kIo, "cannot initialise SHA-256");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_, data, n) != 1) throw Error(ErrorKind::kIo, "SHA-256 update failed");
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, md.data(), &len) != 1) {
      throw Error(ErrorKind::kIo, "SHA-256 finalisation failed");
    }
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "read failed for " + path.string());
  return h.hex();
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json inputs_json = nlohmann::json::array();
  for (const ManifestInput& in : inputs) {
    inputs_json.push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
  }
  return {{"tool", "csprobe"},
          {"version", tool_version},
          {"command", command},
          {"config", config},
          {"config_sha256", sha256_hex(config.dump())},
          {"inputs", inputs_json},
          {"outputs", outputs}};
}

}  // namespace csprobe
