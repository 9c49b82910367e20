#include "ftklipse/digest.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include <openssl/evp.h>
#include <zlib.h>

#include "ftklipse/error.hpp"

namespace ftk {

std::size_t digest_hex_length(std::string_view algorithm) {
    if (algorithm == kSha256) return 64;
    return 0;
}

struct Sha256::Impl {
    EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
    impl_->ctx = EVP_MD_CTX_new();
    if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1)
        fail(ErrorCode::internal, "SHA-256 initialisation failed");
}

Sha256::~Sha256() { EVP_MD_CTX_free(impl_->ctx); }

void Sha256::update(ByteView data) {
    if (!data.empty()) EVP_DigestUpdate(impl_->ctx, data.data(), data.size());
}

std::string Sha256::finish() {
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(impl_->ctx, md.data(), &len);
    return to_hex(ByteView(md.data(), len));
}

std::string sha256_hex(ByteView data) {
    Sha256 h;
    h.update(data);
    return h.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec))
        fail(ErrorCode::missing_evidence, "file missing: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        auto n = static_cast<std::size_t>(in.gcount());
        h.update(ByteView(reinterpret_cast<const std::uint8_t*>(buf.data()), n));
    }
    if (in.bad()) fail(ErrorCode::io, "read failed: " + path.string());
    return h.finish();
}

std::uint32_t crc32(ByteView data) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes a uInt length; feed in chunks for large payloads.
    std::size_t off = 0;
    while (off < data.size()) {
        auto n = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
        crc = ::crc32(crc, data.data() + off, n);
        off += n;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace ftk
