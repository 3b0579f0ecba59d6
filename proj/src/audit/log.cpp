#include "zks/audit/log.hpp"

#include <fstream>

#include "json.hpp"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/zkp/sponge.hpp"

namespace zks::audit {
namespace {

using zkp::Fp;

std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

nlohmann::json fields_json(const AuditFields& f, Fp prev) {
    const auto& a = f.action;
    nlohmann::json action = {{"zone", a.zone},
                             {"target", a.target},
                             {"decision", policy::to_string(a.decision)},
                             {"basis", a.basis},
                             {"confidence", a.confidence}};
    return {{"ts", f.ts},           {"site_id", f.site_id},   {"zone", f.zone},
            {"action", action},     {"u", f.u},               {"c", f.c.to_hex()},
            {"h_theta", f.h_theta.to_hex()}, {"t_win", f.t_win}, {"pi_size", f.pi_size},
            {"prev_digest", prev.to_hex()}};
}

}  // namespace

Signer Signer::from_seed(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x6d6163));
    return Signer({Fp(rng.next_u64() % Fp::kModulus), Fp(rng.next_u64() % Fp::kModulus)});
}

Signer Signer::from_hex(std::string_view hex) {
    if (hex.size() != 32) throw FormatError("signing key must be 32 hex digits");
    return Signer({Fp::from_hex(hex.substr(0, 16)), Fp::from_hex(hex.substr(16))});
}

std::string Signer::to_hex() const { return key_[0].to_hex() + key_[1].to_hex(); }

Fp Signer::sign(std::string_view bytes) const {
    auto e = zkp::pack_bytes(as_bytes(bytes));
    e.insert(e.begin(), key_.begin(), key_.end());
    return zkp::sponge_hash(e, zkp::Domain::mac);
}

std::string AuditEntry::unsigned_line() const { return fields_json(fields, prev_digest).dump(); }

std::string AuditEntry::line() const {
    auto j = fields_json(fields, prev_digest);
    j["sig"] = sig.to_hex();
    return j.dump();
}

AuditEntry AuditEntry::parse(const std::string& line) {
    AuditEntry e;
    try {
        const auto j = nlohmann::json::parse(line);
        if (j.size() != 11) throw FormatError("audit entry must have 11 fields");
        auto& f = e.fields;
        f.ts = j.at("ts").get<std::int64_t>();
        f.site_id = j.at("site_id").get<std::string>();
        f.zone = j.at("zone").get<std::string>();
        f.u = j.at("u").get<double>();
        f.c = Fp::from_hex(j.at("c").get<std::string>());
        f.h_theta = Fp::from_hex(j.at("h_theta").get<std::string>());
        f.t_win = j.at("t_win").get<std::uint64_t>();
        f.pi_size = j.at("pi_size").get<std::uint64_t>();
        const auto& a = j.at("action");
        if (a.size() != 5) throw FormatError("action record must have 5 fields");
        f.action.zone = a.at("zone").get<std::string>();
        f.action.target = a.at("target").get<std::string>();
        const auto d = policy::parse_decision(a.at("decision").get<std::string>());
        if (!d) throw FormatError("unknown decision");
        f.action.decision = *d;
        f.action.basis = a.at("basis").get<std::vector<std::string>>();
        f.action.confidence = a.at("confidence").get<double>();
        e.prev_digest = Fp::from_hex(j.at("prev_digest").get<std::string>());
        e.sig = Fp::from_hex(j.at("sig").get<std::string>());
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("malformed audit entry: ") + ex.what());
    }
    if (e.line() != line) throw FormatError("audit entry is not in canonical form");
    return e;
}

Fp genesis_digest() {
    static const Fp g = zkp::hash_bytes(as_bytes("zks-audit-genesis"), zkp::Domain::digest);
    return g;
}

Fp line_digest(std::string_view line) { return zkp::hash_bytes(as_bytes(line), zkp::Domain::digest); }

AuditLog::AuditLog(Signer signer, std::optional<std::filesystem::path> file)
    : signer_(signer), file_(std::move(file)) {}

const AuditEntry& AuditLog::append(const AuditFields& fields) {
    AuditEntry e;
    e.fields = fields;
    e.prev_digest = lines_.empty() ? genesis_digest() : line_digest(lines_.back());
    e.sig = signer_.sign(e.unsigned_line());
    auto line = e.line();
    if (file_) {
        std::ofstream out(*file_, std::ios::app | std::ios::binary);
        out << line << '\n';
        out.flush();
        if (!out) throw AppendError("cannot append to audit log " + file_->string());
    }
    lines_.push_back(std::move(line));
    entries_.push_back(std::move(e));
    return entries_.back();
}

Anchor AuditLog::anchor() const {
    return {lines_.size(), lines_.empty() ? genesis_digest() : line_digest(lines_.back())};
}

ChainCheck verify_chain(std::span<const std::string> lines, const Signer& signer, const std::optional<Anchor>& anchor) {
    auto bad = [](std::size_t i, std::string why) { return ChainCheck{false, i, std::move(why)}; };
    Fp prev = genesis_digest();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        AuditEntry e;
        try {
            e = AuditEntry::parse(lines[i]);
        } catch (const FormatError& ex) {
            return bad(i, ex.what());
        }
        if (e.prev_digest != prev) return bad(i, "chain link broken");
        if (signer.sign(e.unsigned_line()) != e.sig) return bad(i, "signature mismatch");
        prev = line_digest(lines[i]);
    }
    if (anchor) {
        if (lines.size() < anchor->count) return bad(lines.size(), "log shorter than its anchor");
        if (lines.size() > anchor->count) return bad(anchor->count, "log longer than its anchor");
        if (prev != anchor->head) return bad(lines.empty() ? 0 : lines.size() - 1, "head digest mismatch");
    }
    return {};
}

ChainCheck verify_log_text(std::string_view text, const Signer& signer, const std::optional<Anchor>& anchor) {
    const auto lines = split_lines(text);
    auto check = verify_chain(lines, signer, anchor);
    if (check.ok && !text.empty() && text.back() != '\n') return {false, lines.size() - 1, "unterminated last line"};
    return check;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            out.emplace_back(text.substr(start));
            break;
        }
        out.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

std::vector<std::string> read_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read audit log " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return split_lines(text);
}

}  // namespace zks::audit
