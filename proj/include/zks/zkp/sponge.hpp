#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "zks/zkp/field.hpp"

namespace zks::zkp {

/// Permutation parameters: width 3 (rate 2, capacity 1), x^7 S-box,
/// 8 full rounds split around 22 partial rounds, MDS matrix circ(2, 1, 1).
struct PermutationParams {
    static constexpr std::size_t kWidth = 3;
    static constexpr std::size_t kRate = 2;
    static constexpr std::size_t kFullRounds = 8;
    static constexpr std::size_t kPartialRounds = 22;
    static constexpr std::size_t kRounds = kFullRounds + kPartialRounds;
    static constexpr std::uint64_t kAlpha = 7;

    std::array<std::array<Fp, kWidth>, kRounds> round_constants;
    std::array<std::array<Fp, kWidth>, kWidth> mds;

    static bool is_full_round(std::size_t r) {
        return r < kFullRounds / 2 || r >= kFullRounds / 2 + kPartialRounds;
    }
};

const PermutationParams& permutation_params();

using SpongeState = std::array<Fp, PermutationParams::kWidth>;

void permute(SpongeState& state);

/// Domain tags keep hashes for different purposes apart. The tag and the
/// input length initialize the capacity element.
enum class Domain : std::uint64_t {
    plain = 0,
    merkle_leaf = 1,
    merkle_node = 2,
    transcript = 3,
    challenge = 4,
    commitment = 5,
    model = 6,
    mac = 7,
    digest = 8,
    bytes = 9,
};

Fp capacity_tag(std::size_t n_elements, Domain domain);

Fp sponge_hash(std::span<const Fp> elements, Domain domain = Domain::plain);
Fp hash_pair(Fp left, Fp right, Domain domain);

/// hash([]) under the plain domain.
inline constexpr std::uint64_t kEmptyHash = 0x8baf1e30a799261aULL;

/// Bytes packed 7 per element (little-endian), prefixed by the byte length.
std::vector<Fp> pack_bytes(std::span<const std::uint8_t> bytes);
Fp hash_bytes(std::span<const std::uint8_t> bytes, Domain domain = Domain::bytes);

/// Squeeze-mode sponge seeded by a single element; yields a stream of
/// pseudo-random field elements (Fiat-Shamir challenges).
class ChallengeStream {
public:
    explicit ChallengeStream(Fp seed);
    Fp next();
    // Uniform-ish index in [0, n); bias is below n / p.
    std::uint64_t next_index(std::uint64_t n);

private:
    SpongeState state_;
    std::size_t pos_ = PermutationParams::kRate;
};

}  // namespace zks::zkp
