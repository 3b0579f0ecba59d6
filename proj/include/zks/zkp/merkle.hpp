#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zks/zkp/field.hpp"

namespace zks::zkp {

Fp leaf_digest(Fp value, Fp salt);

/// Binary Merkle tree over leaf digests, padded with zero leaves to a power
/// of two. Internal nodes use the sponge under the merkle_node domain.
class MerkleTree {
public:
    explicit MerkleTree(std::vector<Fp> leaves);

    Fp root() const { return layers_.back().front(); }
    std::size_t num_leaves() const { return num_leaves_; }
    std::size_t depth() const { return layers_.size() - 1; }

    /// Sibling digests needed to recompute the root from the given leaves
    /// (sorted, distinct). Emitted bottom-up, left to right per level.
    std::vector<Fp> multiproof(std::span<const std::uint64_t> sorted_indices) const;

private:
    std::size_t num_leaves_;
    std::vector<std::vector<Fp>> layers_;
};

std::size_t merkle_depth(std::size_t num_leaves);

/// Number of sibling digests a multiproof for these indices carries.
std::size_t multiproof_size(std::size_t num_leaves, std::span<const std::uint64_t> sorted_indices);

/// Recomputes the root; nullopt when the sibling list has the wrong length.
std::optional<Fp> root_from_multiproof(std::size_t num_leaves, std::span<const std::uint64_t> sorted_indices,
                                       std::span<const Fp> leaf_digests, std::span<const Fp> siblings);

}  // namespace zks::zkp
