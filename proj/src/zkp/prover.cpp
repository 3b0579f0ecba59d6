#include "zks/zkp/prover.hpp"

#include <algorithm>

#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/zkp/merkle.hpp"

namespace zks::zkp {
namespace {

bool any_decides(std::span<const Statement> statements) {
    return std::any_of(statements.begin(), statements.end(), [](const Statement& s) { return !s.abstains(); });
}

Fp random_fp(Rng& rng) {
    std::uint64_t v;
    do {
        v = rng.next_u64();
    } while (v >= Fp::kModulus);
    return Fp(v);
}

}  // namespace

std::uint32_t openings_for(const Circuit& circuit, std::span<const Statement> statements) {
    return default_openings(nonbinding_constraints(circuit.system(any_decides(statements))));
}

Proof prove(const Circuit& circuit, const Statement& statement, const WitnessInput& input, const ProveParams& params) {
    return prove_batch(circuit, std::span(&statement, 1), std::span(&input, 1), params);
}

Proof prove_batch(const Circuit& circuit, std::span<const Statement> statements, std::span<const WitnessInput> inputs,
                  const ProveParams& params, ProveStats* stats) {
    if (statements.empty() || statements.size() != inputs.size()) {
        throw ParameterError("batch needs one input per statement and at least one statement");
    }
    for (std::size_t i = 1; i < statements.size(); ++i) {
        if (statements[i].h_theta != statements[0].h_theta) throw ParameterError("batch mixes model hashes");
        if (statements[i].t_win <= statements[i - 1].t_win) throw ParameterError("batch t_win must increase");
    }
    const bool full = any_decides(statements);
    std::vector<std::vector<Fp>> witnesses;
    witnesses.reserve(statements.size());
    for (std::size_t i = 0; i < statements.size(); ++i) {
        const bool decides = !statements[i].abstains();
        auto w = circuit.witness(statements[i], inputs[i]);
        const auto& cs = circuit.system(decides);
        if (!cs.is_satisfied(w)) throw ProverError("witness does not satisfy the circuit; refusing to prove");
        if (stats) {
            stats->constraint_instances += cs.size();
            if (decides) stats->c4_instances += cs.size() - circuit.prefix_constraints();
        }
        witnesses.push_back(std::move(w));
    }
    const auto k = params.openings.value_or(openings_for(circuit, statements));
    return commit_and_open(circuit.system(full), statements, witnesses, k, params.salt_seed);
}

Proof commit_and_open(const ConstraintSystem& cs, std::span<const Statement> statements,
                      std::span<const std::vector<Fp>> witnesses, std::uint32_t k, std::uint64_t salt_seed) {
    const std::size_t n = cs.num_vars;
    const std::size_t batch = witnesses.size();
    if (batch == 0 || batch != statements.size()) throw ParameterError("one witness per statement");
    for (const auto& w : witnesses) {
        if (w.size() > n) throw ParameterError("witness longer than the constraint system");
    }
    auto value = [&](std::size_t i, Var v) { return v < witnesses[i].size() ? witnesses[i][v] : Fp::zero(); };

    Rng rng(salt_seed);
    std::vector<Fp> salts(n);
    for (auto& s : salts) s = random_fp(rng);
    std::vector<Fp> leaves(n);
    std::vector<Fp> column(batch);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t i = 0; i < batch; ++i) column[i] = value(i, static_cast<Var>(v));
        leaves[v] = column_digest(column, salts[v]);
    }
    const MerkleTree tree(std::move(leaves));

    Proof proof;
    proof.k = k;
    proof.root = tree.root();
    const auto binding = binding_slots(cs);
    const auto sampled = sample_constraints(cs, transcript_seed(statements, k, proof.root), k);
    const auto extra = sampled_slots(cs, sampled, binding);

    for (const auto* block : {&binding, &extra}) {
        for (const Var v : *block) {
            for (std::size_t i = 0; i < batch; ++i) proof.values.push_back(value(i, v));
            proof.salts.push_back(salts[v]);
        }
    }
    std::vector<std::uint64_t> opened(binding.begin(), binding.end());
    opened.insert(opened.end(), extra.begin(), extra.end());
    std::sort(opened.begin(), opened.end());
    proof.siblings = tree.multiproof(opened);
    return proof;
}

AmortizedCost amortized_metrics(double batch_seconds, std::size_t batch_bytes, std::size_t batch) {
    if (batch == 0) throw ParameterError("batch size must be at least 1");
    const auto b = static_cast<double>(batch);
    return {batch_seconds / b, static_cast<double>(batch_bytes) / b};
}

}  // namespace zks::zkp
