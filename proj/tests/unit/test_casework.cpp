#include <gtest/gtest.h>

#include <set>

#include "ftklipse/casework.hpp"
#include "ftklipse/digest.hpp"
#include "ftklipse/error.hpp"
#include "test_support.hpp"

using namespace ftk;
using namespace ftk::test;

namespace {

template <typename F>
ErrorCode error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::internal;
}

std::vector<CustodyOperation> ops_of(const Evidence& e) {
    std::vector<CustodyOperation> out;
    for (const auto& ev : list_custody(e)) out.push_back(ev.operation);
    return out;
}

class CaseworkTest : public ::testing::Test {
protected:
    TempDir tmp;
    StoreHandle store = Store::open(tmp / "data", AdapterKind::file);
    Casework cw{store};

    fs::path source(const std::string& name, const std::string& content) {
        auto p = tmp / name;
        write_text(p, content);
        return p;
    }
};

}  // namespace

TEST_F(CaseworkTest, AllocateIdStartsAtOneAndIncrements) {
    EXPECT_EQ(cw.allocate_id(), 1u);
    store->write_id_counter(41);
    EXPECT_EQ(cw.allocate_id(), 42u);
    std::set<std::uint64_t> seen;
    std::uint64_t last = 42;
    for (int i = 0; i < 1000; ++i) {
        auto id = cw.allocate_id();
        EXPECT_GT(id, last);
        last = id;
        seen.insert(id);
    }
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_EQ(store->read_id_counter(), last);
}

TEST_F(CaseworkTest, CreateCase) {
    Case c = cw.create_case("Intrusion 2006-04", "mokhov");
    EXPECT_EQ(c.id, 1u);
    EXPECT_TRUE(c.evidences.empty());
    EXPECT_EQ(c.front_matter, FrontMatter{});
    EXPECT_TRUE(fs::is_directory(tmp.path() / "data" / "1"));
    EXPECT_EQ(error_of([&] { cw.create_case("   ", "x"); }), ErrorCode::validation);
    Case d = cw.create_case("Second", "mokhov");
    EXPECT_NE(c.id, d.id);
    EXPECT_EQ(store->list_case_ids(), (std::vector<std::uint64_t>{c.id, d.id}));
}

TEST_F(CaseworkTest, ImportAbcAndEmpty) {
    Case c = cw.create_case("T", "I");
    Evidence abc = cw.import_evidence(c.id, source("abc.txt", "abc"), "suhasini");
    EXPECT_EQ(abc.size_bytes, 3u);
    EXPECT_EQ(abc.reference_hash, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(abc.reference_hash, sha256sum_oracle(cw.evidence_file(abc)));
    EXPECT_EQ(abc.hash_algorithm, "sha256");
    EXPECT_EQ(abc.managed_path, "1/" + std::to_string(abc.id) + "_abc.txt");
    ASSERT_EQ(abc.custody.size(), 1u);
    EXPECT_EQ(abc.custody[0].seq, 1u);
    EXPECT_EQ(abc.custody[0].principal, "suhasini");
    EXPECT_EQ(abc.custody[0].operation, CustodyOperation::imported);
    EXPECT_EQ(abc.custody[0].detail, (tmp / "abc.txt").string());

    Evidence empty = cw.import_evidence(c.id, source("empty.bin", ""), "suhasini");
    EXPECT_EQ(empty.size_bytes, 0u);
    EXPECT_EQ(empty.reference_hash, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(cw.get_case(c.id).evidences.size(), 2u);
}

TEST_F(CaseworkTest, ImportErrors) {
    Case c = cw.create_case("T", "I");
    EXPECT_EQ(error_of([&] { cw.import_evidence(c.id, tmp / "missing", "p"); }), ErrorCode::io);
    EXPECT_EQ(error_of([&] { cw.import_evidence(99, source("a", "a"), "p"); }), ErrorCode::not_found);
    EXPECT_TRUE(cw.get_case(c.id).evidences.empty());
}

TEST_F(CaseworkTest, HostileNamesAreSanitized) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("x", "data"), "p", std::string("../../etc/pa\nss"));
    EXPECT_EQ(e.original_name, "../../etc/pa\nss");
    EXPECT_EQ(fs::path(e.managed_path).parent_path(), fs::path("1"));
    EXPECT_TRUE(fs::exists(cw.evidence_file(e)));
    EXPECT_EQ(sanitize_file_name("a/b\\c\x01"), "a_b_c_");
    // The id prefix keeps equal sanitized names apart.
    Evidence e2 = cw.import_evidence(c.id, source("y", "other"), "p", std::string("../../etc/pa\nss"));
    EXPECT_NE(e.managed_path, e2.managed_path);
}

TEST_F(CaseworkTest, VerifyOkThenTampered) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("f.bin", "some evidence bytes"), "p");
    auto ok = cw.verify_evidence(e.id, "p");
    EXPECT_TRUE(ok.ok);
    EXPECT_EQ(ok.expected_hash, ok.actual_hash);

    flip_byte(cw.evidence_file(e), 3);
    auto bad = cw.verify_evidence(e.id, "q");
    EXPECT_FALSE(bad.ok);
    EXPECT_EQ(bad.actual_hash, sha256sum_oracle(cw.evidence_file(e)));
    EXPECT_NE(bad.actual_hash, bad.expected_hash);

    auto ev = cw.get_evidence(e.id);
    EXPECT_EQ(ops_of(ev), (std::vector{CustodyOperation::imported, CustodyOperation::verified,
                                       CustodyOperation::verified}));
    EXPECT_EQ(ev.custody[1].detail, "ok");
    EXPECT_EQ(ev.custody[2].detail, "MISMATCH expected=" + bad.expected_hash + " actual=" + bad.actual_hash);
    EXPECT_EQ(ev.custody[2].seq, 3u);
}

TEST_F(CaseworkTest, VerifyMissingFile) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("f.bin", "x"), "p");
    fs::remove(cw.evidence_file(e));
    EXPECT_EQ(error_of([&] { cw.verify_evidence(e.id, "p"); }), ErrorCode::missing_evidence);
    auto ev = cw.get_evidence(e.id);
    ASSERT_EQ(ev.custody.size(), 2u);
    EXPECT_EQ(ev.custody[1].operation, CustodyOperation::verified);
    EXPECT_EQ(ev.custody[1].detail, "file missing");
}

TEST_F(CaseworkTest, ExtractRegion) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("g.txt", "ABCDEFG"), "p");
    Evidence child = cw.extract_region(e.id, 0, 4, "prefix", "p");
    EXPECT_EQ(read_file(cw.evidence_file(child)), Bytes({'A', 'B', 'C', 'D'}));
    EXPECT_EQ(child.parent_evidence_id, e.id);
    EXPECT_EQ(child.reference_hash, sha256_hex(as_bytes("ABCD")));
    ASSERT_EQ(child.custody.size(), 1u);
    EXPECT_EQ(child.custody[0].operation, CustodyOperation::extracted);

    auto src = cw.get_evidence(e.id);
    ASSERT_EQ(src.custody.size(), 2u);
    EXPECT_EQ(src.custody[1].operation, CustodyOperation::extracted);
    EXPECT_EQ(src.custody[1].detail, "offset=0 length=4 child=" + std::to_string(child.id));

    Evidence full = cw.extract_region(e.id, 0, 7, "full", "p");
    EXPECT_EQ(full.reference_hash, e.reference_hash);

    EXPECT_EQ(error_of([&] { cw.extract_region(e.id, 5, 3, "x", "p"); }), ErrorCode::validation);
    EXPECT_EQ(error_of([&] { cw.extract_region(e.id, 2, 0, "x", "p"); }), ErrorCode::validation);
    EXPECT_EQ(error_of([&] { cw.extract_region(e.id, 8, 1, "x", "p"); }), ErrorCode::validation);
}

TEST_F(CaseworkTest, ExtractFromTamperedSourceCreatesNothing) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("g.txt", "ABCDEFG"), "p");
    flip_byte(cw.evidence_file(e), 0);
    auto before = cw.get_case(c.id);
    EXPECT_EQ(error_of([&] { cw.extract_region(e.id, 0, 2, "x", "p"); }), ErrorCode::integrity);
    EXPECT_EQ(error_of([&] { cw.duplicate_evidence(e.id, "x", "p"); }), ErrorCode::integrity);
    EXPECT_EQ(cw.get_case(c.id), before);
    std::size_t files = 0;
    for (auto& entry : fs::directory_iterator(cw.case_dir(c.id))) files += entry.is_regular_file();
    EXPECT_EQ(files, 1u);
}

TEST_F(CaseworkTest, Duplicate) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("abc", "abc"), "p");
    Evidence copy = cw.duplicate_evidence(e.id, "abc-copy", "p");
    EXPECT_EQ(copy.reference_hash, e.reference_hash);
    EXPECT_EQ(copy.original_name, "abc-copy");
    EXPECT_EQ(copy.parent_evidence_id, e.id);
    EXPECT_TRUE(cw.verify_evidence(copy.id, "p").ok);
    EXPECT_EQ(cw.get_evidence(e.id).custody.back().operation, CustodyOperation::duplicated);
    EXPECT_EQ(copy.custody.front().operation, CustodyOperation::duplicated);

    std::mt19937_64 rng(1);
    auto big = tmp / "big.bin";
    write_bytes(big, random_bytes(rng, 1 << 20));
    Evidence b = cw.import_evidence(c.id, big, "p");
    Evidence bc = cw.duplicate_evidence(b.id, "big-copy", "p");
    EXPECT_EQ(bc.size_bytes, b.size_bytes);
    EXPECT_EQ(sha256sum_oracle(cw.evidence_file(bc)), sha256sum_oracle(cw.evidence_file(b)));
}

TEST_F(CaseworkTest, Notes) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("j.jpg", "\xff\xd8\xff\xe0rest"), "p");
    Note n = cw.add_note(e.id, "suhasini", "JPEG header at start", Region{0, 2});
    EXPECT_EQ(n.author, "suhasini");
    EXPECT_EQ(n.text, "JPEG header at start");
    EXPECT_EQ(n.region, (Region{0, 2}));
    EXPECT_EQ(error_of([&] { cw.add_note(e.id, "s", "off end", Region{e.size_bytes, 1}); }), ErrorCode::validation);
    EXPECT_EQ(error_of([&] { cw.add_note(e.id, "s", "  "); }), ErrorCode::validation);
    Note n2 = cw.add_note(e.id, "s", "second");
    EXPECT_GT(n2.id, n.id);
    auto ev = cw.get_evidence(e.id);
    EXPECT_EQ(ev.notes, (std::vector<Note>{n, n2}));
    EXPECT_EQ(ev.custody[1].detail, "note=" + std::to_string(n.id) + " offset=0 length=2");
}

TEST_F(CaseworkTest, CustodyOrderImportVerifyNote) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("a", "a"), "p");
    cw.verify_evidence(e.id, "p");
    cw.add_note(e.id, "p", "n");
    auto custody = list_custody(cw.get_evidence(e.id));
    EXPECT_EQ(ops_of(cw.get_evidence(e.id)),
              (std::vector{CustodyOperation::imported, CustodyOperation::verified, CustodyOperation::note_added}));
    for (std::size_t i = 0; i < custody.size(); ++i) {
        EXPECT_EQ(custody[i].seq, i + 1);
        if (i) EXPECT_GE(custody[i].timestamp, custody[i - 1].timestamp);
    }
}

TEST(Casework, TimestampsClampedWhenClockGoesBackwards) {
    TempDir tmp;
    TimestampMs t = 10'000;
    Casework cw(Store::open(tmp / "data", AdapterKind::memory), [&] { return t; });
    write_text(tmp / "s", "s");
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, tmp / "s", "p");
    t = 5'000;
    cw.verify_evidence(e.id, "p");
    auto custody = cw.get_evidence(e.id).custody;
    EXPECT_EQ(custody[1].timestamp, 10'000);
}

TEST_F(CaseworkTest, DetailClampedAtUtf8Boundary) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("a", "a"), "p");
    std::string detail = "x";
    for (int i = 0; i < 600; ++i) detail += "é";
    auto ev = cw.record_event(e.id, "p", CustodyOperation::viewed, detail);
    EXPECT_LE(ev.detail.size(), kMaxCustodyDetail);
    EXPECT_EQ(ev.detail.size(), 1023u);
    EXPECT_EQ(detail.substr(0, ev.detail.size()), ev.detail);
}

TEST_F(CaseworkTest, IdsUniqueAcrossKinds) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("a", "abc"), "p");
    Note n = cw.add_note(e.id, "p", "n");
    Evidence x = cw.extract_region(e.id, 0, 1, "x", "p");
    Case c2 = cw.create_case("T2", "I");
    std::set<std::uint64_t> ids{c.id, e.id, n.id, x.id, c2.id};
    EXPECT_EQ(ids.size(), 5u);
}

TEST_F(CaseworkTest, ReopenPreservesEverything) {
    Case c = cw.create_case("T", "I");
    Evidence e = cw.import_evidence(c.id, source("a", "abcdef"), "p");
    cw.add_note(e.id, "p", "n", Region{1, 2});
    cw.extract_region(e.id, 1, 3, "x", "p");
    cw.set_front_matter(c.id, FrontMatter{"sum", "intro", "end"});
    auto before = cw.list_cases();
    store->close();

    Casework reopened(Store::open(tmp / "data", AdapterKind::file));
    EXPECT_EQ(reopened.list_cases(), before);
    EXPECT_EQ(reopened.get_evidence(e.id), before[0].evidences[0]);
}

TEST(CaseCodec, RoundTripAndVersion) {
    Case empty;
    empty.id = 1;
    EXPECT_EQ(deserialize_case(serialize_case(empty)), empty);

    std::mt19937_64 rng(17);
    Case c;
    c.id = 9;
    c.title = "t";
    c.created_at = 123;
    c.front_matter = {"a", "b", "c"};
    for (int i = 0; i < 3; ++i) {
        Evidence e;
        e.id = 10 + i;
        e.case_id = 9;
        e.original_name = random_text(rng, 20, true);
        e.managed_path = "9/x";
        e.size_bytes = rng();
        e.hash_algorithm = "sha256";
        e.reference_hash = std::string(64, 'a');
        if (i) e.parent_evidence_id = 10;
        for (int k = 0; k < 4; ++k)
            e.custody.push_back(CustodyEvent{static_cast<std::uint64_t>(k + 1), "p", static_cast<TimestampMs>(k),
                                             static_cast<CustodyOperation>(rng() % 8), random_text(rng, 50, true)});
        c.evidences.push_back(e);
    }
    for (int k = 0; k < 5; ++k) {
        Note n{static_cast<std::uint64_t>(100 + k), "a", 5, random_text(rng, 30, true), std::nullopt};
        if (k % 2) n.region = Region{1, 2};
        c.evidences[k % 3].notes.push_back(n);
    }
    Bytes bytes = serialize_case(c);
    EXPECT_EQ(deserialize_case(bytes), c);
    EXPECT_EQ(serialize_case(deserialize_case(bytes)), bytes);

    bytes[0] = 255;
    EXPECT_EQ(error_of([&] { deserialize_case(bytes); }), ErrorCode::decode);
    Bytes truncated = serialize_case(c);
    truncated.resize(truncated.size() - 3);
    EXPECT_EQ(error_of([&] { deserialize_case(truncated); }), ErrorCode::decode);
    EXPECT_EQ(error_of([&] { deserialize_case({}); }), ErrorCode::decode);
}

TEST(CaseCodec, ExactLayoutOfEmptyCase) {
    Case c;
    c.id = 1;
    c.title = "T";
    c.created_at = 2;
    c.investigator = "I";
    // u8 version | u64 id | text title | i64 created_at | text investigator |
    // u32 evidence count | 3 x text front matter
    Bytes want = {1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 'T', 2, 0, 0, 0, 0, 0, 0, 0,
                  1, 0, 0, 0, 'I', 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(serialize_case(c), want);
}

TEST(Custody, OperationNames) {
    for (int i = 0; i < 8; ++i) {
        auto op = static_cast<CustodyOperation>(i);
        EXPECT_EQ(parse_custody_operation(to_string(op)), op);
    }
    EXPECT_EQ(to_string(CustodyOperation::exported_to_report), "exported_to_report");
    EXPECT_FALSE(parse_custody_operation("deleted"));
}
