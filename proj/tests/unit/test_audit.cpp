#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "zks/audit/log.hpp"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"

using namespace zks;
using namespace zks::audit;
using zkp::Fp;

namespace {

AuditFields random_fields(Rng& rng, std::uint64_t t) {
    AuditFields f;
    f.ts = static_cast<std::int64_t>(1'700'000'000'000 + t * 500);
    f.site_id = "site-" + std::to_string(rng.below(4));
    f.zone = rng.below(2) == 0 ? "kitchen" : "hall";
    f.action.zone = f.zone;
    f.action.target = "door-" + std::to_string(rng.below(3));
    f.action.decision = static_cast<policy::Decision>(rng.below(policy::kDecisionCount));
    f.action.basis = {"class_" + std::to_string(rng.below(5))};
    f.u = static_cast<double>(rng.below(129)) / 128.0;
    f.action.confidence = f.u;
    f.c = Fp(rng.next_u64() % Fp::kModulus);
    f.h_theta = Fp(rng.next_u64() % Fp::kModulus);
    f.t_win = t;
    f.pi_size = 1000 + rng.below(100000);
    return f;
}

AuditLog random_log(std::size_t n, std::uint64_t seed, const Signer& signer) {
    Rng rng(seed);
    AuditLog log(signer);
    for (std::size_t i = 0; i < n; ++i) log.append(random_fields(rng, i));
    return log;
}

// Flattens to file bytes and back, the form a tamperer edits.
std::string join(const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines) s += l + '\n';
    return s;
}

// Line index that owns byte offset `pos`, its trailing newline included.
std::size_t owner(const std::vector<std::string>& lines, std::size_t pos) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        off += lines[i].size() + 1;
        if (pos < off) return i;
    }
    return lines.size();
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove(path);
    }
    ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("first entry chains to the genesis constant") {
    const auto signer = Signer::from_seed(1);
    Rng rng(2);
    AuditLog log(signer);
    const auto& e = log.append(random_fields(rng, 0));
    CHECK(e.prev_digest == genesis_digest());
    CHECK(log.size() == 1);
    CHECK(verify_chain(log.lines(), signer).ok);
}

TEST_CASE("second entry chains to the first") {
    const auto signer = Signer::from_seed(1);
    const auto log = random_log(2, 3, signer);
    CHECK(log.entries()[1].prev_digest == line_digest(log.lines()[0]));
    CHECK(log.entries()[1].prev_digest != genesis_digest());
}

TEST_CASE("entries serialize canonically with sorted keys") {
    const auto signer = Signer::from_seed(1);
    const auto log = random_log(5, 4, signer);
    for (const auto& line : log.lines()) {
        CHECK(line.find(' ') == std::string::npos);
        CHECK(line.rfind("{\"action\":{\"basis\":", 0) == 0);
        const auto e = AuditEntry::parse(line);
        CHECK(e.line() == line);
    }
    CHECK_THROWS_AS(AuditEntry::parse("{\"ts\":1}"), FormatError);
    CHECK_THROWS_AS(AuditEntry::parse("not json"), FormatError);
    // Insignificant whitespace makes the line non-canonical.
    const auto j = log.lines()[0];
    auto spaced = j;
    spaced.insert(1, " ");
    CHECK_THROWS_AS(AuditEntry::parse(spaced), FormatError);
}

TEST_CASE("1000 random appends verify") {
    const auto signer = Signer::from_seed(9);
    const auto log = random_log(1000, 5, signer);
    const auto check = verify_chain(log.lines(), signer, log.anchor());
    CHECK(check.ok);
    CHECK_FALSE(check.first_bad.has_value());
}

TEST_CASE("a wrong key fails at the first entry") {
    const auto log = random_log(10, 6, Signer::from_seed(1));
    const auto check = verify_chain(log.lines(), Signer::from_seed(2));
    CHECK_FALSE(check.ok);
    CHECK(check.first_bad == std::size_t{0});
}

TEST_CASE("one byte flipped in entry 5 of 10 is reported at index 5") {
    const auto signer = Signer::from_seed(1);
    const auto log = random_log(10, 7, signer);
    auto lines = log.lines();
    lines[5][lines[5].size() / 2] ^= 0x01;
    const auto check = verify_chain(lines, signer);
    CHECK_FALSE(check.ok);
    CHECK(check.first_bad == std::size_t{5});
}

TEST_CASE("a deleted entry is reported at the splice point") {
    const auto signer = Signer::from_seed(1);
    const auto log = random_log(10, 8, signer);
    auto lines = log.lines();
    lines.erase(lines.begin() + 4);
    const auto check = verify_chain(lines, signer);
    CHECK_FALSE(check.ok);
    CHECK(check.first_bad == std::size_t{4});
    CHECK(check.reason == "chain link broken");
}

TEST_CASE("truncation is caught by the anchor only") {
    const auto signer = Signer::from_seed(1);
    const auto log = random_log(10, 9, signer);
    auto lines = log.lines();
    lines.pop_back();
    CHECK(verify_chain(lines, signer).ok);
    const auto check = verify_chain(lines, signer, log.anchor());
    CHECK_FALSE(check.ok);
    CHECK(check.first_bad == std::size_t{9});
    lines = log.lines();
    lines.push_back(lines.back());
    CHECK(verify_chain(lines, signer, log.anchor()).first_bad == std::size_t{10});
}

TEST_CASE("every single-byte mutation or deletion in a 1000-entry log is located") {
    const auto signer = Signer::from_seed(11);
    const auto log = random_log(1000, 12, signer);
    const auto anchor = log.anchor();
    const auto text = join(log.lines());
    Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const auto pos = static_cast<std::size_t>(rng.below(text.size()));
        const auto expected = owner(log.lines(), pos);
        auto mutated = text;
        if (trial % 3 == 0) {
            mutated.erase(pos, 1);
        } else {
            mutated[pos] = static_cast<char>(mutated[pos] ^ (1 + rng.below(255)));
        }
        const auto check = verify_log_text(mutated, signer, anchor);
        REQUIRE_FALSE(check.ok);
        CHECK(check.first_bad == expected);
    }
    for (int trial = 0; trial < 100; ++trial) {
        auto lines = log.lines();
        const auto idx = static_cast<std::size_t>(rng.below(lines.size()));
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(idx));
        const auto check = verify_chain(lines, signer, anchor);
        REQUIRE_FALSE(check.ok);
        CHECK(check.first_bad == idx);
    }
    // The final newline belongs to the last entry.
    const auto check = verify_log_text(text.substr(0, text.size() - 1), signer, anchor);
    CHECK_FALSE(check.ok);
    CHECK(check.first_bad == std::size_t{999});
}

TEST_CASE("log file round trip") {
    TempFile tmp("zks_audit_roundtrip.jsonl");
    const auto signer = Signer::from_seed(21);
    AuditLog log(signer, tmp.path);
    Rng rng(22);
    for (std::uint64_t i = 0; i < 50; ++i) log.append(random_fields(rng, i));
    const auto lines = read_log(tmp.path);
    CHECK(lines == log.lines());
    CHECK(verify_chain(lines, signer, log.anchor()).ok);
}

TEST_CASE("append failure leaves the log unchanged") {
    const auto signer = Signer::from_seed(1);
    Rng rng(23);
    AuditLog log(signer, std::filesystem::path("/nonexistent-dir/zks/log.jsonl"));
    CHECK_THROWS_AS(log.append(random_fields(rng, 0)), AppendError);
    CHECK(log.size() == 0);
    CHECK(log.anchor().head == genesis_digest());
}

TEST_CASE("signing keys round trip through hex") {
    const auto s = Signer::from_seed(31);
    const auto back = Signer::from_hex(s.to_hex());
    CHECK(back.sign("abc") == s.sign("abc"));
    CHECK(s.sign("abc") != s.sign("abd"));
    CHECK_THROWS_AS(Signer::from_hex("abc"), FormatError);
}
