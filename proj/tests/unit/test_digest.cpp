#include <gtest/gtest.h>

#include "ftklipse/digest.hpp"
#include "ftklipse/error.hpp"
#include "test_support.hpp"

using namespace ftk;
using namespace ftk::test;

TEST(Digest, KnownVectors) {
    EXPECT_EQ(sha256_hex(as_bytes("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(as_bytes("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex(as_bytes("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")),
              "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST(Digest, IncrementalMatchesOneShot) {
    std::mt19937_64 rng(7);
    Bytes data = random_bytes(rng, 100'000);
    Sha256 h;
    std::size_t pos = 0;
    std::uniform_int_distribution<std::size_t> step(0, 5000);
    while (pos < data.size()) {
        std::size_t n = std::min(step(rng), data.size() - pos);
        h.update(ByteView(data).subspan(pos, n));
        pos += n;
    }
    EXPECT_EQ(h.finish(), sha256_hex(data));
}

TEST(Digest, FileDigestMatchesSha256sum) {
    TempDir tmp;
    std::mt19937_64 rng(11);
    for (std::size_t size : {0u, 1u, 63u, 64u, 65u, 4096u, 1u << 20}) {
        auto p = tmp / ("f" + std::to_string(size));
        write_bytes(p, random_bytes(rng, size));
        EXPECT_EQ(sha256_file(p), sha256sum_oracle(p)) << size;
    }
}

TEST(Digest, MissingFileIsMissingEvidence) {
    TempDir tmp;
    try {
        sha256_file(tmp / "nope");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::missing_evidence);
    }
}

TEST(Digest, DigestLength) {
    EXPECT_EQ(digest_hex_length(kSha256), 64u);
    EXPECT_EQ(digest_hex_length("md5"), 0u);
}

TEST(Crc32, MatchesBitwiseReference) {
    EXPECT_EQ(crc32(as_bytes("123456789")), 0xCBF43926u);
    EXPECT_EQ(crc32(as_bytes("")), 0u);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        Bytes b = random_bytes(rng, static_cast<std::size_t>(rng() % 5000));
        EXPECT_EQ(crc32(b), crc32_bitwise(b));
    }
}
