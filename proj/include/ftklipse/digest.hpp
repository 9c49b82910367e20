#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "ftklipse/util.hpp"

namespace ftk {

inline constexpr const char* kSha256 = "sha256";

/// Length in hex characters of a digest for `algorithm`, 0 if unknown.
std::size_t digest_hex_length(std::string_view algorithm);

/// Incremental SHA-256.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(ByteView data);
    /// Lowercase hex digest; the hasher cannot be reused afterwards.
    std::string finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(ByteView data);

/// Streams the file through SHA-256. Throws io / missing_evidence errors.
std::string sha256_file(const std::filesystem::path& path);

std::uint32_t crc32(ByteView data);

}  // namespace ftk
