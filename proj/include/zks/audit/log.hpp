#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zks/policy/action.hpp"
#include "zks/zkp/field.hpp"

namespace zks::audit {

/// Keyed sponge MAC; the key is two field elements.
class Signer {
public:
    explicit Signer(std::array<zkp::Fp, 2> key) : key_(key) {}
    static Signer from_seed(std::uint64_t seed);
    /// 32 hex digits; throws FormatError.
    static Signer from_hex(std::string_view hex);
    std::string to_hex() const;

    zkp::Fp sign(std::string_view bytes) const;

private:
    std::array<zkp::Fp, 2> key_;
};

struct AuditFields {
    std::int64_t ts = 0;  // milliseconds
    std::string site_id;
    std::string zone;
    policy::ActionRecord action;
    double u = 0.0;
    zkp::Fp c;
    zkp::Fp h_theta;
    std::uint64_t t_win = 0;
    std::uint64_t pi_size = 0;
};

struct AuditEntry {
    AuditFields fields;
    zkp::Fp prev_digest;
    zkp::Fp sig;

    /// Canonical JSON without sig: sorted keys, no whitespace.
    std::string unsigned_line() const;
    /// Canonical JSON with sig; one log line.
    std::string line() const;
    /// Throws FormatError unless the line parses and is canonical.
    static AuditEntry parse(const std::string& line);
};

/// prev_digest of the first entry.
zkp::Fp genesis_digest();
zkp::Fp line_digest(std::string_view line);

/// Count and last digest, kept apart from the log to catch truncation.
struct Anchor {
    std::size_t count = 0;
    zkp::Fp head;
};

/// Single-writer append-only log; lines are mirrored to a file when one is
/// given.
class AuditLog {
public:
    explicit AuditLog(Signer signer, std::optional<std::filesystem::path> file = std::nullopt);

    /// Throws AppendError on I/O failure, leaving the log unchanged.
    const AuditEntry& append(const AuditFields& fields);

    const std::vector<AuditEntry>& entries() const { return entries_; }
    const std::vector<std::string>& lines() const { return lines_; }
    std::size_t size() const { return entries_.size(); }
    Anchor anchor() const;

private:
    Signer signer_;
    std::optional<std::filesystem::path> file_;
    std::vector<AuditEntry> entries_;
    std::vector<std::string> lines_;
};

struct ChainCheck {
    bool ok = true;
    std::optional<std::size_t> first_bad;
    std::string reason;
};

/// Linear scan: canonical form, signature and chain link per line. With an
/// anchor, a shortened log fails at the first missing index.
ChainCheck verify_chain(std::span<const std::string> lines, const Signer& signer,
                        const std::optional<Anchor>& anchor = std::nullopt);

/// verify_chain over file bytes; every line, the last included, must end in
/// '\n', so a dropped final newline is caught at the last entry.
ChainCheck verify_log_text(std::string_view text, const Signer& signer,
                           const std::optional<Anchor>& anchor = std::nullopt);

/// Splits on '\n'; a trailing newline does not add an empty line.
std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> read_log(const std::filesystem::path& path);

}  // namespace zks::audit
