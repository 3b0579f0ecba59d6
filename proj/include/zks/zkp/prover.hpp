#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zks/zkp/circuit.hpp"
#include "zks/zkp/proof.hpp"

namespace zks::zkp {

struct ProveParams {
    /// Defaults to the smallest k with miss probability <= 1e-3.
    std::optional<std::uint32_t> openings;
    /// Seeds the per-slot blinding salts.
    std::uint64_t salt_seed = 0;
};

/// Constraint rows the prover synthesized and checked, summed over a batch.
struct ProveStats {
    std::size_t constraint_instances = 0;
    std::size_t c4_instances = 0;
};

/// Throws ProverError when the witness does not satisfy its variant.
Proof prove(const Circuit& circuit, const Statement& statement, const WitnessInput& input, const ProveParams& params);

/// One commitment over B instances of one circuit. Statements must share
/// the model hash and have strictly increasing t_win (ParameterError).
/// Abstaining instances are padded with zeros in the decision slots.
Proof prove_batch(const Circuit& circuit, std::span<const Statement> statements, std::span<const WitnessInput> inputs,
                  const ProveParams& params, ProveStats* stats = nullptr);

/// Commits and opens the given witnesses without checking them; the
/// soundness experiments use it to play a cheating prover.
Proof commit_and_open(const ConstraintSystem& cs, std::span<const Statement> statements,
                      std::span<const std::vector<Fp>> witnesses, std::uint32_t k, std::uint64_t salt_seed);

/// Openings the circuit uses by default for a batch with these statements.
std::uint32_t openings_for(const Circuit& circuit, std::span<const Statement> statements);

struct AmortizedCost {
    double seconds_per_window = 0.0;
    double bytes_per_window = 0.0;
};

/// Exact division of measured batch totals by B >= 1.
AmortizedCost amortized_metrics(double batch_seconds, std::size_t batch_bytes, std::size_t batch);

}  // namespace zks::zkp
