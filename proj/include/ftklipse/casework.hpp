#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ftklipse/datastore.hpp"
#include "ftklipse/util.hpp"

namespace ftk {

enum class CustodyOperation : std::uint8_t {
    imported = 0,
    verified = 1,
    viewed = 2,
    extracted = 3,
    duplicated = 4,
    note_added = 5,
    tool_run = 6,
    exported_to_report = 7,
};

std::string_view to_string(CustodyOperation op) noexcept;
std::optional<CustodyOperation> parse_custody_operation(std::string_view s) noexcept;

inline constexpr std::size_t kMaxCustodyDetail = 1024;

struct Region {
    std::uint64_t offset = 0;
    std::uint64_t length = 0;

    friend bool operator==(const Region&, const Region&) = default;
};

struct CustodyEvent {
    std::uint64_t seq = 0;
    std::string principal;
    TimestampMs timestamp = 0;
    CustodyOperation operation = CustodyOperation::imported;
    std::string detail;

    friend bool operator==(const CustodyEvent&, const CustodyEvent&) = default;
};

struct Note {
    std::uint64_t id = 0;
    std::string author;
    TimestampMs created_at = 0;
    std::string text;
    std::optional<Region> region;

    friend bool operator==(const Note&, const Note&) = default;
};

struct Evidence {
    std::uint64_t id = 0;
    std::uint64_t case_id = 0;
    std::string original_name;
    std::string managed_path;  // relative to the data root: "<case_id>/<id>_<name>"
    std::uint64_t size_bytes = 0;
    std::string hash_algorithm;
    std::string reference_hash;
    TimestampMs imported_at = 0;
    std::optional<std::uint64_t> parent_evidence_id;
    std::vector<Note> notes;
    std::vector<CustodyEvent> custody;

    friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct FrontMatter {
    std::string executive_summary;
    std::string introduction;
    std::string conclusion;

    friend bool operator==(const FrontMatter&, const FrontMatter&) = default;
};

struct Case {
    std::uint64_t id = 0;
    std::string title;
    TimestampMs created_at = 0;
    std::string investigator;
    std::vector<Evidence> evidences;
    FrontMatter front_matter;

    const Evidence* find_evidence(std::uint64_t evidence_id) const;
    Evidence* find_evidence(std::uint64_t evidence_id);

    friend bool operator==(const Case&, const Case&) = default;
};

struct VerificationResult {
    bool ok = false;
    std::string expected_hash;
    std::string actual_hash;
    TimestampMs checked_at = 0;

    friend bool operator==(const VerificationResult&, const VerificationResult&) = default;
};

inline constexpr std::uint8_t kCaseFormatVersion = 1;

/// Canonical binary encoding: u8 format version, then fields in declaration
/// order; integers fixed-width little-endian, text u32-length-prefixed,
/// lists u32 count + elements, optionals u8 presence flag + value.
Bytes serialize_case(const Case& c);
Case deserialize_case(ByteView payload);

/// Replaces path separators and control characters with '_'.
std::string sanitize_file_name(std::string_view name);

/// Events in seq order (the stored order).
std::vector<CustodyEvent> list_custody(const Evidence& evidence);

using Clock = std::function<TimestampMs()>;

/// The domain engine. Every mutation loads the case, applies the change,
/// and persists it under a per-case lock.
class Casework {
public:
    explicit Casework(StoreHandle store, Clock clock = now_utc_ms);

    Casework(const Casework&) = delete;
    Casework& operator=(const Casework&) = delete;

    const StoreHandle& store() const { return store_; }
    const std::filesystem::path& data_root() const { return data_root_; }
    std::filesystem::path case_dir(std::uint64_t case_id) const;
    std::filesystem::path evidence_file(const Evidence& evidence) const;

    std::uint64_t allocate_id();

    Case create_case(const std::string& title, const std::string& investigator);
    Case get_case(std::uint64_t case_id);
    std::vector<Case> list_cases();
    void set_front_matter(std::uint64_t case_id, const FrontMatter& fm);

    /// Throws not_found.
    Evidence get_evidence(std::uint64_t evidence_id);

    Evidence import_evidence(std::uint64_t case_id, const std::filesystem::path& source,
                             const std::string& principal,
                             const std::optional<std::string>& original_name = std::nullopt,
                             const std::optional<std::string>& detail = std::nullopt);

    VerificationResult verify_evidence(std::uint64_t evidence_id, const std::string& principal);

    /// Recomputes the digest without recording anything.
    VerificationResult check_integrity(std::uint64_t evidence_id);

    Evidence extract_region(std::uint64_t evidence_id, std::uint64_t offset, std::uint64_t length,
                            const std::string& new_name, const std::string& principal);

    Evidence duplicate_evidence(std::uint64_t evidence_id, const std::string& new_name,
                                const std::string& principal);

    Note add_note(std::uint64_t evidence_id, const std::string& author, const std::string& text,
                  const std::optional<Region>& region = std::nullopt);

    /// Appends one custody event for operations recorded by outer layers
    /// (viewed, tool_run, exported_to_report).
    CustodyEvent record_event(std::uint64_t evidence_id, const std::string& principal,
                              CustodyOperation op, const std::string& detail);

    /// Imports a file produced from `parent_evidence_id` (tool output) as a
    /// child evidence and appends `parent_event` to the parent, atomically.
    Evidence import_derived(std::uint64_t parent_evidence_id, const std::filesystem::path& source,
                            const std::string& name, const std::string& principal,
                            const std::string& child_detail);

private:
    std::mutex& case_mutex(std::uint64_t case_id);
    std::uint64_t case_of(std::uint64_t evidence_id);
    Case load(std::uint64_t case_id);
    void persist(const Case& c);
    TimestampMs append_event(Evidence& ev, const std::string& principal, CustodyOperation op,
                             const std::string& detail);
    Evidence copy_in(Case& c, const std::filesystem::path& source, const std::string& name,
                     std::optional<std::uint64_t> parent, const std::string& principal,
                     CustodyOperation origin, const std::string& origin_detail,
                     std::optional<Region> region);
    void require_intact(const Evidence& ev);

    StoreHandle store_;
    std::filesystem::path data_root_;
    Clock clock_;

    std::mutex index_mu_;
    std::map<std::uint64_t, std::unique_ptr<std::mutex>> case_locks_;
    std::map<std::uint64_t, std::uint64_t> evidence_index_;  // evidence id -> case id
};

}  // namespace ftk
