#include "ftklipse/datastore.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <set>

#include "ftklipse/digest.hpp"
#include "ftklipse/error.hpp"

namespace ftk {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'F', 'T', 'K', '1'};
constexpr std::size_t kHeaderSize = 4 + 2 + 8;
constexpr std::size_t kTrailerSize = 4;

template <typename T>
void put_le(Bytes& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

Bytes encode_counter(std::uint64_t value) {
    Bytes payload;
    put_le<std::uint64_t>(payload, value);
    return payload;
}

class MemoryAdapter final : public StorageAdapter {
public:
    void put(const CaseRecord& record) override { records_[record.case_id] = record; }

    std::optional<CaseRecord> get(std::uint64_t case_id) override {
        auto it = records_.find(case_id);
        if (it == records_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<std::uint64_t> list() override {
        std::vector<std::uint64_t> ids;
        ids.reserve(records_.size());
        for (const auto& [id, _] : records_) ids.push_back(id);
        return ids;
    }

    std::uint64_t read_counter() override { return counter_; }
    void write_counter(std::uint64_t value) override { counter_ = value; }

private:
    std::map<std::uint64_t, CaseRecord> records_;
    std::uint64_t counter_ = 0;
};

class FileAdapter final : public StorageAdapter {
public:
    explicit FileAdapter(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_))
            fail(ErrorCode::io, "cannot create store directory " + dir_.string());

        // Probe writability up front so open fails, not the first put.
        fs::path probe = dir_ / ".probe";
        try {
            write_file(probe, {});
        } catch (const Error&) {
            fail(ErrorCode::io, "store directory not writable: " + dir_.string());
        }
        fs::remove(probe, ec);

        fs::path counter = counter_path();
        if (fs::exists(counter)) {
            counter_ = decode_counter(read_file(counter));
        } else {
            write_file_atomic(counter, encode_record_container(kRecordVersion, encode_counter(0)));
        }

        for (const auto& entry : fs::directory_iterator(dir_)) {
            if (auto id = parse_record_name(entry.path().filename().string())) ids_.insert(*id);
        }
    }

    void put(const CaseRecord& record) override {
        write_file_atomic(record_path(record.case_id),
                          encode_record_container(record.version, record.payload));
        ids_.insert(record.case_id);
    }

    std::optional<CaseRecord> get(std::uint64_t case_id) override {
        fs::path p = record_path(case_id);
        if (!ids_.contains(case_id) && !fs::exists(p)) return std::nullopt;
        if (!fs::exists(p)) fail(ErrorCode::corruption, "record file vanished: " + p.string());
        return decode_record_container(case_id, read_file(p), p.string());
    }

    std::vector<std::uint64_t> list() override { return {ids_.begin(), ids_.end()}; }

    std::uint64_t read_counter() override { return counter_; }

    void write_counter(std::uint64_t value) override {
        write_file_atomic(counter_path(), encode_record_container(kRecordVersion, encode_counter(value)));
        counter_ = value;
    }

private:
    fs::path counter_path() const { return dir_ / "id_count.rec"; }

    fs::path record_path(std::uint64_t id) const {
        return dir_ / ("case_" + std::to_string(id) + ".rec");
    }

    static std::optional<std::uint64_t> parse_record_name(const std::string& name) {
        constexpr std::string_view prefix = "case_", suffix = ".rec";
        if (name.size() <= prefix.size() + suffix.size()) return std::nullopt;
        if (!name.starts_with(prefix) || !name.ends_with(suffix)) return std::nullopt;
        std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
        if (digits.empty() || digits.size() > 19 ||
            !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
            return std::nullopt;
        auto id = std::stoull(digits);
        if (id == 0) return std::nullopt;
        return id;
    }

    std::uint64_t decode_counter(const Bytes& raw) const {
        auto rec = decode_record_container(0, raw, counter_path().string());
        if (rec.payload.size() != 8)
            fail(ErrorCode::corruption, "corrupt counter file " + counter_path().string());
        return get_le<std::uint64_t>(rec.payload.data());
    }

    fs::path dir_;
    std::set<std::uint64_t> ids_;
    std::uint64_t counter_ = 0;
};

}  // namespace

Bytes encode_record_container(std::uint16_t version, ByteView payload) {
    Bytes out;
    out.reserve(kHeaderSize + payload.size() + kTrailerSize);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_le<std::uint16_t>(out, version);
    put_le<std::uint64_t>(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
    put_le<std::uint32_t>(out, crc32(payload));
    return out;
}

CaseRecord decode_record_container(std::uint64_t case_id, ByteView raw, const std::string& name) {
    if (raw.size() < kHeaderSize + kTrailerSize)
        fail(ErrorCode::corruption, "truncated record file " + name);
    if (std::memcmp(raw.data(), kMagic, 4) != 0)
        fail(ErrorCode::corruption, "bad magic in record file " + name);
    auto version = get_le<std::uint16_t>(raw.data() + 4);
    auto length = get_le<std::uint64_t>(raw.data() + 6);
    if (version < 1) fail(ErrorCode::corruption, "bad version in record file " + name);
    if (length != raw.size() - kHeaderSize - kTrailerSize)
        fail(ErrorCode::corruption, "length mismatch in record file " + name);
    ByteView payload = raw.subspan(kHeaderSize, length);
    auto stored = get_le<std::uint32_t>(raw.data() + kHeaderSize + length);
    if (stored != crc32(payload)) fail(ErrorCode::corruption, "checksum mismatch in record file " + name);
    return CaseRecord{case_id, Bytes(payload.begin(), payload.end()), version};
}

Store::Store(fs::path root, AdapterKind kind, std::unique_ptr<StorageAdapter> adapter)
    : root_(std::move(root)), kind_(kind), adapter_(std::move(adapter)) {}

std::shared_ptr<Store> Store::open(const fs::path& root, AdapterKind kind) {
    if (root.empty()) fail(ErrorCode::validation, "empty store root path");
    std::unique_ptr<StorageAdapter> adapter;
    if (kind == AdapterKind::file) {
        std::error_code ec;
        fs::create_directories(root, ec);
        if (ec && !fs::is_directory(root)) fail(ErrorCode::io, "cannot create data root " + root.string());
        adapter = std::make_unique<FileAdapter>(root / "store");
    } else {
        adapter = std::make_unique<MemoryAdapter>();
    }
    return std::shared_ptr<Store>(new Store(root, kind, std::move(adapter)));
}

void Store::require_open() const {
    if (!adapter_) fail(ErrorCode::usage, "store handle is closed");
}

void Store::put_case_record(const CaseRecord& record) {
    std::lock_guard lock(mu_);
    require_open();
    if (record.case_id < 1) fail(ErrorCode::validation, "case id must be >= 1");
    adapter_->put(record);
}

CaseRecord Store::get_case_record(std::uint64_t case_id) {
    std::lock_guard lock(mu_);
    require_open();
    if (case_id < 1) fail(ErrorCode::validation, "case id must be >= 1");
    auto rec = adapter_->get(case_id);
    if (!rec) fail(ErrorCode::not_found, "no case record " + std::to_string(case_id));
    return std::move(*rec);
}

std::vector<std::uint64_t> Store::list_case_ids() {
    std::lock_guard lock(mu_);
    require_open();
    auto ids = adapter_->list();
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::uint64_t Store::read_id_counter() {
    std::lock_guard lock(mu_);
    require_open();
    return adapter_->read_counter();
}

void Store::write_id_counter(std::uint64_t value) {
    std::lock_guard lock(mu_);
    require_open();
    auto current = adapter_->read_counter();
    if (value < current)
        fail(ErrorCode::monotonicity, "id counter may not decrease (" + std::to_string(current) + " -> " +
                                          std::to_string(value) + ")");
    adapter_->write_counter(value);
}

std::uint64_t Store::increment_id_counter() {
    std::lock_guard lock(mu_);
    require_open();
    auto next = adapter_->read_counter() + 1;
    adapter_->write_counter(next);
    return next;
}

void Store::close() {
    std::lock_guard lock(mu_);
    adapter_.reset();
}

bool Store::is_open() const {
    std::lock_guard lock(mu_);
    return adapter_ != nullptr;
}

}  // namespace ftk
