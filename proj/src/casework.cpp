#include "ftklipse/casework.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>

#include "ftklipse/digest.hpp"
#include "ftklipse/error.hpp"

namespace ftk {

namespace fs = std::filesystem;

std::string_view to_string(CustodyOperation op) noexcept {
    switch (op) {
        case CustodyOperation::imported: return "imported";
        case CustodyOperation::verified: return "verified";
        case CustodyOperation::viewed: return "viewed";
        case CustodyOperation::extracted: return "extracted";
        case CustodyOperation::duplicated: return "duplicated";
        case CustodyOperation::note_added: return "note_added";
        case CustodyOperation::tool_run: return "tool_run";
        case CustodyOperation::exported_to_report: return "exported_to_report";
    }
    return "unknown";
}

std::optional<CustodyOperation> parse_custody_operation(std::string_view s) noexcept {
    for (std::uint8_t i = 0; i <= static_cast<std::uint8_t>(CustodyOperation::exported_to_report); ++i) {
        auto op = static_cast<CustodyOperation>(i);
        if (to_string(op) == s) return op;
    }
    return std::nullopt;
}

const Evidence* Case::find_evidence(std::uint64_t evidence_id) const {
    for (const auto& e : evidences)
        if (e.id == evidence_id) return &e;
    return nullptr;
}

Evidence* Case::find_evidence(std::uint64_t evidence_id) {
    for (auto& e : evidences)
        if (e.id == evidence_id) return &e;
    return nullptr;
}

std::string sanitize_file_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (unsigned char ch : name) {
        if (ch == '/' || ch == '\\' || ch < 0x20 || ch == 0x7f)
            out.push_back('_');
        else
            out.push_back(static_cast<char>(ch));
    }
    if (out.empty()) out = "_";
    return out;
}

std::vector<CustodyEvent> list_custody(const Evidence& evidence) { return evidence.custody; }

namespace {

// Cuts at a UTF-8 character boundary.
std::string clamp_detail(const std::string& detail) {
    if (detail.size() <= kMaxCustodyDetail) return detail;
    std::size_t cut = kMaxCustodyDetail;
    while (cut > 0 && (static_cast<unsigned char>(detail[cut]) & 0xC0) == 0x80) --cut;
    return detail.substr(0, cut);
}

struct CopyOutcome {
    std::uint64_t size = 0;
    std::string source_digest;
};

// Streams [offset, offset+length) of `source` (whole file when no region)
// into `dest`, hashing the bytes read.
CopyOutcome stream_copy(const fs::path& source, const fs::path& dest, std::optional<Region> region) {
    std::ifstream in(source, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot read source " + source.string());
    std::ofstream out(dest, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot create " + dest.string());

    std::uint64_t remaining = std::numeric_limits<std::uint64_t>::max();
    if (region) {
        in.seekg(static_cast<std::streamoff>(region->offset));
        if (!in) fail(ErrorCode::io, "seek failed in " + source.string());
        remaining = region->length;
    }

    Sha256 hasher;
    CopyOutcome result;
    std::array<char, 1 << 16> buf{};
    while (remaining > 0 && in) {
        auto want = static_cast<std::streamsize>(std::min<std::uint64_t>(buf.size(), remaining));
        in.read(buf.data(), want);
        auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0) break;
        hasher.update(ByteView(reinterpret_cast<const std::uint8_t*>(buf.data()), got));
        out.write(buf.data(), static_cast<std::streamsize>(got));
        result.size += got;
        remaining -= got;
    }
    if (in.bad()) fail(ErrorCode::io, "read failed: " + source.string());
    out.flush();
    if (!out) fail(ErrorCode::io, "write failed: " + dest.string());
    if (region && result.size != region->length)
        fail(ErrorCode::io, "short read from " + source.string());
    result.source_digest = hasher.finish();
    return result;
}

}  // namespace

Casework::Casework(StoreHandle store, Clock clock)
    : store_(std::move(store)), data_root_(fs::absolute(store_->root()).lexically_normal()), clock_(std::move(clock)) {
    for (auto id : store_->list_case_ids()) {
        Case c = load(id);
        for (const auto& e : c.evidences) evidence_index_[e.id] = c.id;
    }
}

fs::path Casework::case_dir(std::uint64_t case_id) const { return data_root_ / std::to_string(case_id); }

fs::path Casework::evidence_file(const Evidence& evidence) const { return data_root_ / evidence.managed_path; }

std::mutex& Casework::case_mutex(std::uint64_t case_id) {
    std::lock_guard lock(index_mu_);
    auto& slot = case_locks_[case_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

std::uint64_t Casework::case_of(std::uint64_t evidence_id) {
    std::lock_guard lock(index_mu_);
    auto it = evidence_index_.find(evidence_id);
    if (it == evidence_index_.end()) fail(ErrorCode::not_found, "no evidence " + std::to_string(evidence_id));
    return it->second;
}

Case Casework::load(std::uint64_t case_id) {
    CaseRecord rec;
    try {
        rec = store_->get_case_record(case_id);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::not_found) fail(ErrorCode::not_found, "no case " + std::to_string(case_id));
        throw;
    }
    return deserialize_case(rec.payload);
}

void Casework::persist(const Case& c) {
    store_->put_case_record(CaseRecord{c.id, serialize_case(c), kRecordVersion});
}

TimestampMs Casework::append_event(Evidence& ev, const std::string& principal, CustodyOperation op,
                                   const std::string& detail) {
    CustodyEvent event;
    event.seq = ev.custody.empty() ? 1 : ev.custody.back().seq + 1;
    event.principal = principal;
    event.timestamp = clock_();
    if (!ev.custody.empty()) event.timestamp = std::max(event.timestamp, ev.custody.back().timestamp);
    event.operation = op;
    event.detail = clamp_detail(detail);
    ev.custody.push_back(std::move(event));
    return ev.custody.back().timestamp;
}

std::uint64_t Casework::allocate_id() { return store_->increment_id_counter(); }

Case Casework::create_case(const std::string& title, const std::string& investigator) {
    std::string t = trim(title);
    if (t.empty()) fail(ErrorCode::validation, "case title must not be empty");
    Case c;
    c.id = allocate_id();
    c.title = t;
    c.investigator = investigator;
    c.created_at = clock_();

    std::error_code ec;
    fs::create_directories(case_dir(c.id), ec);
    if (ec) fail(ErrorCode::io, "cannot create case directory " + case_dir(c.id).string());

    std::lock_guard lock(case_mutex(c.id));
    persist(c);
    return c;
}

Case Casework::get_case(std::uint64_t case_id) { return load(case_id); }

std::vector<Case> Casework::list_cases() {
    std::vector<Case> out;
    for (auto id : store_->list_case_ids()) out.push_back(load(id));
    return out;
}

void Casework::set_front_matter(std::uint64_t case_id, const FrontMatter& fm) {
    std::lock_guard lock(case_mutex(case_id));
    Case c = load(case_id);
    c.front_matter = fm;
    persist(c);
}

Evidence Casework::get_evidence(std::uint64_t evidence_id) {
    Case c = load(case_of(evidence_id));
    const Evidence* e = c.find_evidence(evidence_id);
    if (!e) fail(ErrorCode::not_found, "no evidence " + std::to_string(evidence_id));
    return *e;
}

Evidence Casework::copy_in(Case& c, const fs::path& source, const std::string& name,
                           std::optional<std::uint64_t> parent, const std::string& principal,
                           CustodyOperation origin, const std::string& origin_detail,
                           std::optional<Region> region) {
    Evidence ev;
    ev.id = allocate_id();
    ev.case_id = c.id;
    ev.original_name = name;
    ev.parent_evidence_id = parent;
    ev.hash_algorithm = kSha256;

    fs::path dir = case_dir(c.id);
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::string file_name = std::to_string(ev.id) + "_" + sanitize_file_name(name);
    fs::path final_path = dir / file_name;
    fs::path part_path = dir / (file_name + ".part");

    try {
        CopyOutcome copied = stream_copy(source, part_path, region);
        std::string copy_digest = sha256_file(part_path);
        if (copy_digest != copied.source_digest)
            fail(ErrorCode::integrity, "copy digest " + copy_digest + " differs from source digest " +
                                           copied.source_digest + " for " + source.string());
        fs::rename(part_path, final_path);
        ev.size_bytes = copied.size;
        ev.reference_hash = copy_digest;
    } catch (...) {
        fs::remove(part_path, ec);
        throw;
    }

    ev.managed_path = (fs::path(std::to_string(c.id)) / file_name).generic_string();
    ev.imported_at = append_event(ev, principal, origin, origin_detail);
    return ev;
}

Evidence Casework::import_evidence(std::uint64_t case_id, const fs::path& source, const std::string& principal,
                                   const std::optional<std::string>& original_name,
                                   const std::optional<std::string>& detail) {
    std::error_code ec;
    if (!fs::is_regular_file(source, ec)) fail(ErrorCode::io, "source is not a readable file: " + source.string());

    std::lock_guard lock(case_mutex(case_id));
    Case c = load(case_id);
    std::string name = original_name.value_or(source.filename().string());
    Evidence ev = copy_in(c, source, name, std::nullopt, principal, CustodyOperation::imported,
                          detail.value_or(source.string()), std::nullopt);
    c.evidences.push_back(ev);
    persist(c);
    {
        std::lock_guard idx(index_mu_);
        evidence_index_[ev.id] = c.id;
    }
    return ev;
}

VerificationResult Casework::check_integrity(std::uint64_t evidence_id) {
    Evidence ev = get_evidence(evidence_id);
    VerificationResult r;
    r.expected_hash = ev.reference_hash;
    r.actual_hash = sha256_file(evidence_file(ev));
    r.ok = r.actual_hash == r.expected_hash;
    r.checked_at = clock_();
    return r;
}

VerificationResult Casework::verify_evidence(std::uint64_t evidence_id, const std::string& principal) {
    auto case_id = case_of(evidence_id);
    std::lock_guard lock(case_mutex(case_id));
    Case c = load(case_id);
    Evidence* ev = c.find_evidence(evidence_id);
    if (!ev) fail(ErrorCode::not_found, "no evidence " + std::to_string(evidence_id));

    fs::path file = evidence_file(*ev);
    std::error_code ec;
    if (!fs::exists(file, ec)) {
        append_event(*ev, principal, CustodyOperation::verified, "file missing");
        persist(c);
        fail(ErrorCode::missing_evidence, "evidence file missing: " + file.string());
    }

    VerificationResult r;
    r.expected_hash = ev->reference_hash;
    r.actual_hash = sha256_file(file);
    r.ok = r.actual_hash == r.expected_hash;
    std::string detail = r.ok ? "ok" : "MISMATCH expected=" + r.expected_hash + " actual=" + r.actual_hash;
    r.checked_at = append_event(*ev, principal, CustodyOperation::verified, detail);
    persist(c);
    return r;
}

void Casework::require_intact(const Evidence& ev) {
    std::string actual = sha256_file(evidence_file(ev));
    if (actual != ev.reference_hash)
        fail(ErrorCode::integrity, "evidence " + std::to_string(ev.id) + " failed verification: expected=" +
                                       ev.reference_hash + " actual=" + actual);
}

Evidence Casework::extract_region(std::uint64_t evidence_id, std::uint64_t offset, std::uint64_t length,
                                  const std::string& new_name, const std::string& principal) {
    auto case_id = case_of(evidence_id);
    std::lock_guard lock(case_mutex(case_id));
    Case c = load(case_id);
    Evidence* src = c.find_evidence(evidence_id);
    if (!src) fail(ErrorCode::not_found, "no evidence " + std::to_string(evidence_id));
    if (length < 1) fail(ErrorCode::validation, "extract length must be >= 1");
    if (offset > src->size_bytes || length > src->size_bytes - offset)
        fail(ErrorCode::validation, "region offset=" + std::to_string(offset) + " length=" + std::to_string(length) +
                                        " exceeds evidence size " + std::to_string(src->size_bytes));
    if (trim(new_name).empty()) fail(ErrorCode::validation, "new name must not be empty");
    require_intact(*src);

    std::string origin = "extracted from evidence " + std::to_string(src->id) + " offset=" +
                         std::to_string(offset) + " length=" + std::to_string(length);
    Evidence child = copy_in(c, evidence_file(*src), new_name, src->id, principal, CustodyOperation::extracted,
                             origin, Region{offset, length});
    append_event(*src, principal, CustodyOperation::extracted,
                 "offset=" + std::to_string(offset) + " length=" + std::to_string(length) +
                     " child=" + std::to_string(child.id));
    c.evidences.push_back(child);
    persist(c);
    std::lock_guard idx(index_mu_);
    evidence_index_[child.id] = c.id;
    return child;
}

Evidence Casework::duplicate_evidence(std::uint64_t evidence_id, const std::string& new_name,
                                      const std::string& principal) {
    auto case_id = case_of(evidence_id);
    std::lock_guard lock(case_mutex(case_id));
    Case c = load(case_id);
    Evidence* src = c.find_evidence(evidence_id);
    if (!src) fail(ErrorCode::not_found, "no evidence " + std::to_string(evidence_id));
    if (trim(new_name).empty()) fail(ErrorCode::validation, "new name must not be empty");
    require_intact(*src);

    Evidence child = copy_in(c, evidence_file(*src), new_name, src->id, principal, CustodyOperation::duplicated,
                             "duplicated from evidence " + std::to_string(src->id), std::nullopt);
    if (child.reference_hash != src->reference_hash) {
        std::error_code ec;
        fs::remove(evidence_file(child), ec);
        fail(ErrorCode::integrity, "duplicate digest differs from source evidence " + std::to_string(src->id));
    }
    append_event(*src, principal, CustodyOperation::duplicated, "child=" + std::to_string(child.id));
    c.evidences.push_back(child);
    persist(c);
    std::lock_guard idx(index_mu_);
    evidence_index_[child.id] = c.id;
    return child;
}

Note Casework::add_note(std::uint64_t evidence_id, const std::string& author, const std::string& text,
                        const std::optional<Region>& region) {
    auto case_id = case_of(evidence_id);
    std::lock_guard lock(case_mutex(case_id));
    Case c = load(case_id);
    Evidence* ev = c.find_evidence(evidence_id);
    if (!ev) fail(ErrorCode::not_found, "no evidence " + std::to_string(evidence_id));
    if (trim(text).empty()) fail(ErrorCode::validation, "note text must not be empty");
    if (region && (region->offset > ev->size_bytes || region->length > ev->size_bytes - region->offset))
        fail(ErrorCode::validation, "note region offset=" + std::to_string(region->offset) + " length=" +
                                        std::to_string(region->length) + " exceeds evidence size " +
                                        std::to_string(ev->size_bytes));

    Note n;
    n.id = allocate_id();
    n.author = author;
    n.text = text;
    n.region = region;
    std::string detail = "note=" + std::to_string(n.id);
    if (region) detail += " offset=" + std::to_string(region->offset) + " length=" + std::to_string(region->length);
    n.created_at = append_event(*ev, author, CustodyOperation::note_added, detail);
    ev->notes.push_back(n);
    persist(c);
    return n;
}

CustodyEvent Casework::record_event(std::uint64_t evidence_id, const std::string& principal, CustodyOperation op,
                                    const std::string& detail) {
    auto case_id = case_of(evidence_id);
    std::lock_guard lock(case_mutex(case_id));
    Case c = load(case_id);
    Evidence* ev = c.find_evidence(evidence_id);
    if (!ev) fail(ErrorCode::not_found, "no evidence " + std::to_string(evidence_id));
    append_event(*ev, principal, op, detail);
    CustodyEvent out = ev->custody.back();
    persist(c);
    return out;
}

Evidence Casework::import_derived(std::uint64_t parent_evidence_id, const fs::path& source, const std::string& name,
                                  const std::string& principal, const std::string& child_detail) {
    auto case_id = case_of(parent_evidence_id);
    std::lock_guard lock(case_mutex(case_id));
    Case c = load(case_id);
    if (!c.find_evidence(parent_evidence_id))
        fail(ErrorCode::not_found, "no evidence " + std::to_string(parent_evidence_id));
    Evidence child = copy_in(c, source, name, parent_evidence_id, principal, CustodyOperation::imported,
                             child_detail, std::nullopt);
    c.evidences.push_back(child);
    persist(c);
    std::lock_guard idx(index_mu_);
    evidence_index_[child.id] = c.id;
    return child;
}

}  // namespace ftk
