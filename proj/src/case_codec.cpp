#include <limits>

#include "ftklipse/casework.hpp"
#include "ftklipse/error.hpp"

namespace ftk {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }

    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }

    void text(const std::string& s) {
        if (s.size() > std::numeric_limits<std::uint32_t>::max())
            fail(ErrorCode::validation, "text field too long to encode");
        u32(static_cast<std::uint32_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }

    template <typename T, typename F>
    void list(const std::vector<T>& items, F&& each) {
        u32(static_cast<std::uint32_t>(items.size()));
        for (const auto& item : items) each(item);
    }

    Bytes take() { return std::move(out_); }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes out_;
};

class Reader {
public:
    explicit Reader(ByteView in) : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }

    std::string text() {
        auto n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    bool flag() {
        auto v = u8();
        if (v > 1) fail(ErrorCode::decode, "malformed case payload: bad presence flag");
        return v == 1;
    }

    template <typename T, typename F>
    std::vector<T> list(F&& each) {
        auto n = u32();
        // Each element occupies at least one byte; reject absurd counts early.
        if (n > in_.size() - pos_) fail(ErrorCode::decode, "malformed case payload: bad list count");
        std::vector<T> out;
        out.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) out.push_back(each());
        return out;
    }

    bool at_end() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) fail(ErrorCode::decode, "malformed case payload: truncated");
    }

    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    ByteView in_;
    std::size_t pos_ = 0;
};

void write_region(Writer& w, const std::optional<Region>& r) {
    w.u8(r ? 1 : 0);
    if (r) {
        w.u64(r->offset);
        w.u64(r->length);
    }
}

}  // namespace

Bytes serialize_case(const Case& c) {
    Writer w;
    w.u8(kCaseFormatVersion);
    w.u64(c.id);
    w.text(c.title);
    w.i64(c.created_at);
    w.text(c.investigator);
    w.list(c.evidences, [&](const Evidence& e) {
        w.u64(e.id);
        w.u64(e.case_id);
        w.text(e.original_name);
        w.text(e.managed_path);
        w.u64(e.size_bytes);
        w.text(e.hash_algorithm);
        w.text(e.reference_hash);
        w.i64(e.imported_at);
        w.u8(e.parent_evidence_id ? 1 : 0);
        if (e.parent_evidence_id) w.u64(*e.parent_evidence_id);
        w.list(e.notes, [&](const Note& n) {
            w.u64(n.id);
            w.text(n.author);
            w.i64(n.created_at);
            w.text(n.text);
            write_region(w, n.region);
        });
        w.list(e.custody, [&](const CustodyEvent& ev) {
            w.u64(ev.seq);
            w.text(ev.principal);
            w.i64(ev.timestamp);
            w.u8(static_cast<std::uint8_t>(ev.operation));
            w.text(ev.detail);
        });
    });
    w.text(c.front_matter.executive_summary);
    w.text(c.front_matter.introduction);
    w.text(c.front_matter.conclusion);
    return w.take();
}

Case deserialize_case(ByteView payload) {
    Reader r(payload);
    auto version = r.u8();
    if (version != kCaseFormatVersion)
        fail(ErrorCode::decode, "unsupported case format version " + std::to_string(version));

    auto read_region = [&]() -> std::optional<Region> {
        if (!r.flag()) return std::nullopt;
        Region reg;
        reg.offset = r.u64();
        reg.length = r.u64();
        return reg;
    };

    Case c;
    c.id = r.u64();
    c.title = r.text();
    c.created_at = r.i64();
    c.investigator = r.text();
    c.evidences = r.list<Evidence>([&] {
        Evidence e;
        e.id = r.u64();
        e.case_id = r.u64();
        e.original_name = r.text();
        e.managed_path = r.text();
        e.size_bytes = r.u64();
        e.hash_algorithm = r.text();
        e.reference_hash = r.text();
        e.imported_at = r.i64();
        if (r.flag()) e.parent_evidence_id = r.u64();
        e.notes = r.list<Note>([&] {
            Note n;
            n.id = r.u64();
            n.author = r.text();
            n.created_at = r.i64();
            n.text = r.text();
            n.region = read_region();
            return n;
        });
        e.custody = r.list<CustodyEvent>([&] {
            CustodyEvent ev;
            ev.seq = r.u64();
            ev.principal = r.text();
            ev.timestamp = r.i64();
            auto op = r.u8();
            if (op > static_cast<std::uint8_t>(CustodyOperation::exported_to_report))
                fail(ErrorCode::decode, "malformed case payload: unknown custody operation");
            ev.operation = static_cast<CustodyOperation>(op);
            ev.detail = r.text();
            return ev;
        });
        return e;
    });
    c.front_matter.executive_summary = r.text();
    c.front_matter.introduction = r.text();
    c.front_matter.conclusion = r.text();
    if (!r.at_end()) fail(ErrorCode::decode, "malformed case payload: trailing bytes");
    return c;
}

}  // namespace ftk
