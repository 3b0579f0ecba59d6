#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "zks/zkp/circuit.hpp"
#include "zks/zkp/r1cs.hpp"

namespace zks::zkp {

/// Spot-check proof over a column commitment: leaf j of the Merkle tree
/// hashes slot j of every instance in the batch together with one salt.
///
/// Openings come in two blocks. The binding block (slot 0, the publics and
/// every slot of a binding constraint) has a fixed layout. The sampled
/// block holds the remaining slots of the k challenged constraints, sorted.
/// Values are slot-major: B values per opened slot.
struct Proof {
    std::uint32_t k = 0;
    Fp root;
    std::vector<Fp> values;
    std::vector<Fp> salts;
    std::vector<Fp> siblings;

    friend bool operator==(const Proof&, const Proof&) = default;
};

struct ProofBundle {
    std::vector<Statement> statements;
    Proof proof;
};

inline constexpr std::uint32_t kProofVersion = 1;

/// "ZKPF", version, B, statements, root, k, openings, siblings.
std::vector<std::uint8_t> serialize_proof(std::span<const Statement> statements, const Proof& proof);
/// Throws FormatError.
ProofBundle parse_proof(std::span<const std::uint8_t> bytes);

/// Wire size for B statements, n opened slots and s siblings.
std::size_t proof_bytes(std::size_t batch, std::size_t opened, std::size_t siblings);

/// Slot 0, public slots and slots of binding constraints, sorted.
std::vector<Var> binding_slots(const ConstraintSystem& cs);

/// Fiat-Shamir seed over the statements, k and the witness root.
Fp transcript_seed(std::span<const Statement> statements, std::uint32_t k, Fp root);

/// k draws with replacement from the non-binding constraints, returned
/// sorted and deduplicated.
std::vector<std::size_t> sample_constraints(const ConstraintSystem& cs, Fp seed, std::uint32_t k);

/// Slots of the sampled constraints not already in the binding block.
std::vector<Var> sampled_slots(const ConstraintSystem& cs, std::span<const std::size_t> sampled,
                               std::span<const Var> binding);

Fp column_digest(std::span<const Fp> values, Fp salt);

std::size_t nonbinding_constraints(const ConstraintSystem& cs);

/// Chance that k uniform draws all miss one violated constraint out of m.
double miss_probability(std::size_t m, std::size_t k);

/// Smallest k with miss_probability(m, k) <= target.
std::uint32_t default_openings(std::size_t m, double target = 1e-3);

}  // namespace zks::zkp
