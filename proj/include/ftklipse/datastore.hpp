#pragma once

// Engine-independent persistence of serialized case records plus the global
// max-ID counter. Two adapters ship: an in-memory one and a file one that
// keeps one record container per case under `<root>/store/`.
//
// Record container (little-endian):
//   "FTK1" | u16 version | u64 payload length | payload | u32 CRC-32(payload)
// Writes go to `<name>.tmp` and are renamed into place.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "ftklipse/util.hpp"

namespace ftk {

enum class AdapterKind { memory, file };

struct CaseRecord {
    std::uint64_t case_id = 0;
    Bytes payload;
    std::uint16_t version = 1;

    friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

class StorageAdapter {
public:
    virtual ~StorageAdapter() = default;
    virtual void put(const CaseRecord& record) = 0;
    virtual std::optional<CaseRecord> get(std::uint64_t case_id) = 0;
    virtual std::vector<std::uint64_t> list() = 0;
    virtual std::uint64_t read_counter() = 0;
    virtual void write_counter(std::uint64_t value) = 0;
};

inline constexpr std::uint16_t kRecordVersion = 1;

Bytes encode_record_container(std::uint16_t version, ByteView payload);

/// Inverse of encode_record_container. `name` is used in corruption errors.
CaseRecord decode_record_container(std::uint64_t case_id, ByteView raw, const std::string& name);

/// The store handle. Mutations are serialized; handles may be shared
/// across threads.
class Store {
public:
    static std::shared_ptr<Store> open(const std::filesystem::path& root, AdapterKind kind);

    void put_case_record(const CaseRecord& record);
    CaseRecord get_case_record(std::uint64_t case_id);
    std::vector<std::uint64_t> list_case_ids();
    std::uint64_t read_id_counter();
    void write_id_counter(std::uint64_t value);

    void close();
    bool is_open() const;

    const std::filesystem::path& root() const { return root_; }
    AdapterKind adapter_kind() const { return kind_; }

    /// Serialises a read-modify-write of the counter.
    std::uint64_t increment_id_counter();

private:
    Store(std::filesystem::path root, AdapterKind kind, std::unique_ptr<StorageAdapter> adapter);
    void require_open() const;

    std::filesystem::path root_;
    AdapterKind kind_;
    mutable std::mutex mu_;
    std::unique_ptr<StorageAdapter> adapter_;
};

using StoreHandle = std::shared_ptr<Store>;

}  // namespace ftk
