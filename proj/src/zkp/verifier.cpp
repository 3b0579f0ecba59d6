#include "zks/zkp/verifier.hpp"

#include <algorithm>

#include "zks/zkp/merkle.hpp"

namespace zks::zkp {
namespace {

VerifyResult reject(Reject r, std::size_t instance, std::string detail) {
    VerifyResult out;
    out.reason = r;
    out.instance = instance;
    out.detail = std::move(detail);
    return out;
}

// Decision constraints do not apply to abstaining instances.
bool applies(const Constraint& c, const Statement& s) { return !(s.abstains() && c.family == Family::c4); }

}  // namespace

std::string_view to_string(Reject r) {
    switch (r) {
        case Reject::none: return "none";
        case Reject::malformed: return "malformed";
        case Reject::unknown_hash: return "unknown-hash";
        case Reject::bad_binding: return "bad-binding";
        case Reject::bad_path: return "bad-path";
        case Reject::bad_constraint: return "bad-constraint";
    }
    return "?";
}

VerifyResult verify(const Circuit& circuit, const Statement& statement, const Proof& proof) {
    return verify_batch(circuit, std::span(&statement, 1), proof);
}

VerifyResult verify_batch(const Circuit& circuit, std::span<const Statement> statements, const Proof& proof) {
    const std::size_t batch = statements.size();
    if (batch == 0) return reject(Reject::malformed, 0, "no statements");
    for (std::size_t i = 1; i < batch; ++i) {
        if (statements[i].h_theta != statements[0].h_theta) return reject(Reject::malformed, i, "mixed model hashes");
        if (statements[i].t_win <= statements[i - 1].t_win) return reject(Reject::malformed, i, "t_win not increasing");
    }
    const bool full = std::any_of(statements.begin(), statements.end(), [](const Statement& s) { return !s.abstains(); });
    return verify_system(circuit.system(full), statements, proof);
}

VerifyResult verify_system(const ConstraintSystem& cs, std::span<const Statement> statements, const Proof& proof) {
    const std::size_t batch = statements.size();
    if (batch == 0) return reject(Reject::malformed, 0, "no statements");
    const std::size_t n = cs.num_vars;

    // Binding block: fixed layout, checked before anything seed-dependent.
    const auto binding = binding_slots(cs);
    if (proof.salts.size() < binding.size() || proof.values.size() != proof.salts.size() * batch) {
        return reject(Reject::malformed, 0, "opening counts do not match the circuit");
    }
    std::vector<std::vector<Fp>> w(batch, std::vector<Fp>(n));
    std::size_t pos = 0;
    for (const Var v : binding) {
        for (std::size_t i = 0; i < batch; ++i) w[i][v] = proof.values[pos++];
    }
    for (std::size_t i = 0; i < batch; ++i) {
        if (w[i][kOneVar] != Fp::one()) return reject(Reject::bad_binding, i, "constant slot is not one");
        const auto pub = statements[i].elements();
        for (std::size_t j = 0; j < pub.size(); ++j) {
            if (w[i][cs.public_slots[j]] != pub[j]) return reject(Reject::bad_binding, i, "public input mismatch");
        }
        for (const auto c : cs.binding_indices()) {
            const auto& con = cs.constraints[c];
            if (applies(con, statements[i]) && !con.satisfied(w[i])) {
                return reject(Reject::bad_binding, i, "binding constraint violated");
            }
        }
    }

    const auto sampled = sample_constraints(cs, transcript_seed(statements, proof.k, proof.root), proof.k);
    const auto extra = sampled_slots(cs, sampled, binding);
    if (proof.salts.size() != binding.size() + extra.size()) {
        return reject(Reject::bad_path, 0, "openings do not match the challenged constraints");
    }
    for (const Var v : extra) {
        for (std::size_t i = 0; i < batch; ++i) w[i][v] = proof.values[pos++];
    }

    std::vector<std::uint64_t> opened(binding.begin(), binding.end());
    opened.insert(opened.end(), extra.begin(), extra.end());
    std::vector<std::pair<std::uint64_t, std::size_t>> order;  // slot, index in proof.salts
    order.reserve(opened.size());
    for (std::size_t i = 0; i < opened.size(); ++i) order.emplace_back(opened[i], i);
    std::sort(order.begin(), order.end());
    std::vector<std::uint64_t> sorted_slots;
    std::vector<Fp> digests;
    std::vector<Fp> column(batch);
    for (const auto& [slot, idx] : order) {
        for (std::size_t i = 0; i < batch; ++i) column[i] = w[i][slot];
        sorted_slots.push_back(slot);
        digests.push_back(column_digest(column, proof.salts[idx]));
    }
    const auto root = root_from_multiproof(n, sorted_slots, digests, proof.siblings);
    if (!root || *root != proof.root) return reject(Reject::bad_path, 0, "witness openings do not match the root");

    for (const auto c : sampled) {
        const auto& con = cs.constraints[c];
        for (std::size_t i = 0; i < batch; ++i) {
            if (applies(con, statements[i]) && !con.satisfied(w[i])) {
                return reject(Reject::bad_constraint, i, "challenged constraint " + std::to_string(c) + " violated");
            }
        }
    }
    VerifyResult ok;
    ok.accepted = true;
    ok.insecure = proof.k < default_openings(nonbinding_constraints(cs));
    return ok;
}

VerifyResult verify_registered(const Registry& registry, std::span<const Statement> statements, const Proof& proof) {
    if (statements.empty()) return reject(Reject::malformed, 0, "no statements");
    const auto* entry = registry.find(statements[0].h_theta);
    if (!entry) return reject(Reject::unknown_hash, 0, "model hash not registered");
    return verify_batch(*entry->circuit, statements, proof);
}

}  // namespace zks::zkp
