#include "zks/zkp/merkle.hpp"

#include "zks/common/errors.hpp"
#include "zks/zkp/sponge.hpp"

namespace zks::zkp {

Fp leaf_digest(Fp value, Fp salt) {
    return hash_pair(value, salt, Domain::merkle_leaf);
}

std::size_t merkle_depth(std::size_t num_leaves) {
    std::size_t depth = 0;
    while ((std::size_t{1} << depth) < num_leaves) ++depth;
    return depth;
}

MerkleTree::MerkleTree(std::vector<Fp> leaves) : num_leaves_(leaves.size()) {
    if (leaves.empty()) throw ParameterError("merkle tree needs at least one leaf");
    const std::size_t width = std::size_t{1} << merkle_depth(leaves.size());
    leaves.resize(width, Fp::zero());
    layers_.push_back(std::move(leaves));
    while (layers_.back().size() > 1) {
        const auto& below = layers_.back();
        std::vector<Fp> level(below.size() / 2);
        for (std::size_t i = 0; i < level.size(); ++i) {
            level[i] = hash_pair(below[2 * i], below[2 * i + 1], Domain::merkle_node);
        }
        layers_.push_back(std::move(level));
    }
}

namespace {

// Walks the levels of a multiproof. For each level, known holds the sorted
// node indices whose digests are available; visit(level, index) is called for
// every sibling that must come from the proof.
template <typename Visit>
void walk_levels(std::size_t depth, std::vector<std::uint64_t> known, Visit&& visit) {
    for (std::size_t level = 0; level < depth; ++level) {
        std::vector<std::uint64_t> parents;
        parents.reserve(known.size());
        for (std::size_t i = 0; i < known.size(); ++i) {
            const std::uint64_t node = known[i];
            const std::uint64_t sibling = node ^ 1ULL;
            if ((node & 1ULL) == 0 && i + 1 < known.size() && known[i + 1] == sibling) {
                ++i;  // both children known
            } else {
                visit(level, sibling);
            }
            parents.push_back(node >> 1);
        }
        known = std::move(parents);
    }
}

}  // namespace

std::vector<Fp> MerkleTree::multiproof(std::span<const std::uint64_t> sorted_indices) const {
    std::vector<Fp> out;
    walk_levels(depth(), {sorted_indices.begin(), sorted_indices.end()},
                [&](std::size_t level, std::uint64_t sibling) { out.push_back(layers_[level][sibling]); });
    return out;
}

std::size_t multiproof_size(std::size_t num_leaves, std::span<const std::uint64_t> sorted_indices) {
    std::size_t n = 0;
    walk_levels(merkle_depth(num_leaves), {sorted_indices.begin(), sorted_indices.end()},
                [&](std::size_t, std::uint64_t) { ++n; });
    return n;
}

std::optional<Fp> root_from_multiproof(std::size_t num_leaves, std::span<const std::uint64_t> sorted_indices,
                                       std::span<const Fp> leaf_digests, std::span<const Fp> siblings) {
    if (sorted_indices.size() != leaf_digests.size() || sorted_indices.empty()) return std::nullopt;
    const std::size_t depth = merkle_depth(num_leaves);
    const std::uint64_t width = std::uint64_t{1} << depth;
    for (std::size_t i = 0; i < sorted_indices.size(); ++i) {
        if (sorted_indices[i] >= width) return std::nullopt;
        if (i > 0 && sorted_indices[i] <= sorted_indices[i - 1]) return std::nullopt;
    }

    std::vector<std::uint64_t> known(sorted_indices.begin(), sorted_indices.end());
    std::vector<Fp> digests(leaf_digests.begin(), leaf_digests.end());
    std::size_t next_sibling = 0;
    for (std::size_t level = 0; level < depth; ++level) {
        std::vector<std::uint64_t> parents;
        std::vector<Fp> parent_digests;
        for (std::size_t i = 0; i < known.size(); ++i) {
            const std::uint64_t node = known[i];
            Fp left, right;
            if ((node & 1ULL) == 0 && i + 1 < known.size() && known[i + 1] == (node ^ 1ULL)) {
                left = digests[i];
                right = digests[i + 1];
                ++i;
            } else {
                if (next_sibling >= siblings.size()) return std::nullopt;
                const Fp sib = siblings[next_sibling++];
                left = (node & 1ULL) ? sib : digests[i];
                right = (node & 1ULL) ? digests[i] : sib;
            }
            parents.push_back(node >> 1);
            parent_digests.push_back(hash_pair(left, right, Domain::merkle_node));
        }
        known = std::move(parents);
        digests = std::move(parent_digests);
    }
    if (next_sibling != siblings.size()) return std::nullopt;
    return digests.front();
}

}  // namespace zks::zkp
