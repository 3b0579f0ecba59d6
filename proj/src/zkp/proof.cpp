#include "zks/zkp/proof.hpp"

#include <algorithm>
#include <cmath>

#include "zks/common/bytes.hpp"
#include "zks/common/errors.hpp"
#include "zks/zkp/sponge.hpp"

namespace zks::zkp {
namespace {

constexpr std::size_t kStatementBytes = 5 * 8 + 1;

Fp read_fp(ByteReader& r) {
    const std::uint64_t v = r.u64();
    if (v >= Fp::kModulus) throw FormatError("non-canonical field element");
    return Fp(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_proof(std::span<const Statement> statements, const Proof& proof) {
    ByteWriter w;
    w.tag("ZKPF");
    w.u32(kProofVersion);
    w.u32(static_cast<std::uint32_t>(statements.size()));
    for (const auto& s : statements) {
        w.u64(s.c.value());
        w.u64(s.h_theta.value());
        w.i64(s.tau_q);
        w.u64(s.t_win);
        w.u64(s.nonce.value());
        w.u8(static_cast<std::uint8_t>(s.action));
    }
    w.u64(proof.root.value());
    w.u32(proof.k);
    w.u32(static_cast<std::uint32_t>(proof.salts.size()));
    for (const auto v : proof.values) w.u64(v.value());
    for (const auto v : proof.salts) w.u64(v.value());
    w.u32(static_cast<std::uint32_t>(proof.siblings.size()));
    for (const auto v : proof.siblings) w.u64(v.value());
    return w.take();
}

ProofBundle parse_proof(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("ZKPF");
    if (r.u32() != kProofVersion) throw FormatError("unsupported proof version");
    ProofBundle out;
    const std::size_t batch = r.count(kStatementBytes);
    if (batch == 0) throw FormatError("proof carries no statements");
    for (std::size_t i = 0; i < batch; ++i) {
        Statement s;
        s.c = read_fp(r);
        s.h_theta = read_fp(r);
        s.tau_q = r.i64();
        s.t_win = r.u64();
        s.nonce = read_fp(r);
        const auto a = r.u8();
        if (a >= policy::kDecisionCount) throw FormatError("unknown action id");
        s.action = static_cast<policy::Decision>(a);
        out.statements.push_back(s);
    }
    auto& p = out.proof;
    p.root = read_fp(r);
    p.k = r.u32();
    const std::size_t opened = r.count(8 * (batch + 1));
    p.values.reserve(opened * batch);
    for (std::size_t i = 0; i < opened * batch; ++i) p.values.push_back(read_fp(r));
    for (std::size_t i = 0; i < opened; ++i) p.salts.push_back(read_fp(r));
    const std::size_t siblings = r.count(8);
    for (std::size_t i = 0; i < siblings; ++i) p.siblings.push_back(read_fp(r));
    r.expect_end();
    return out;
}

std::size_t proof_bytes(std::size_t batch, std::size_t opened, std::size_t siblings) {
    return 4 + 4 + 4 + batch * kStatementBytes + 8 + 4 + 4 + opened * (batch + 1) * 8 + 4 + siblings * 8;
}

std::vector<Var> binding_slots(const ConstraintSystem& cs) {
    std::vector<Var> out = {kOneVar};
    out.insert(out.end(), cs.public_slots.begin(), cs.public_slots.end());
    for (const auto i : cs.binding_indices()) {
        const auto s = cs.slots_of(i);
        out.insert(out.end(), s.begin(), s.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Fp transcript_seed(std::span<const Statement> statements, std::uint32_t k, Fp root) {
    std::vector<Fp> e;
    e.reserve(statements.size() * Statement::kElements + 3);
    e.emplace_back(statements.size());
    e.emplace_back(k);
    for (const auto& s : statements) {
        const auto el = s.elements();
        e.insert(e.end(), el.begin(), el.end());
    }
    e.push_back(root);
    return sponge_hash(e, Domain::transcript);
}

std::vector<std::size_t> sample_constraints(const ConstraintSystem& cs, Fp seed, std::uint32_t k) {
    std::vector<std::size_t> pool;
    pool.reserve(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!cs.constraints[i].binding) pool.push_back(i);
    }
    std::vector<std::size_t> out;
    if (pool.empty()) return out;
    out.reserve(k);
    // two 32-bit draws per challenge element; bias is below pool / 2^32
    ChallengeStream stream(seed);
    std::uint64_t word = 0;
    for (std::uint32_t i = 0; i < k; ++i) {
        if (i % 2 == 0) word = stream.next().value();
        const std::uint64_t half = i % 2 == 0 ? word & 0xFFFFFFFFULL : word >> 32;
        out.push_back(pool[half % pool.size()]);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Var> sampled_slots(const ConstraintSystem& cs, std::span<const std::size_t> sampled,
                               std::span<const Var> binding) {
    std::vector<bool> mark(cs.num_vars, false);
    for (const auto i : sampled) {
        const auto& c = cs.constraints[i];
        for (const auto* lc : {&c.a, &c.b, &c.c}) {
            for (const auto& t : lc->terms()) mark[t.var] = true;
        }
    }
    for (const auto v : binding) mark[v] = false;
    std::vector<Var> out;
    for (std::size_t v = 0; v < mark.size(); ++v) {
        if (mark[v]) out.push_back(static_cast<Var>(v));
    }
    return out;
}

Fp column_digest(std::span<const Fp> values, Fp salt) {
    std::vector<Fp> e(values.begin(), values.end());
    e.push_back(salt);
    return sponge_hash(e, Domain::merkle_leaf);
}

std::size_t nonbinding_constraints(const ConstraintSystem& cs) {
    return cs.size() - cs.binding_indices().size();
}

double miss_probability(std::size_t m, std::size_t k) {
    if (m == 0) return 0.0;
    return std::exp(static_cast<double>(k) * std::log1p(-1.0 / static_cast<double>(m)));
}

std::uint32_t default_openings(std::size_t m, double target) {
    if (m <= 1) return 1;
    const double k = std::log(target) / std::log1p(-1.0 / static_cast<double>(m));
    auto out = static_cast<std::uint32_t>(std::ceil(k));
    while (out > 0 && miss_probability(m, out - 1) <= target) --out;
    while (miss_probability(m, out) > target) ++out;
    return out;
}

}  // namespace zks::zkp
