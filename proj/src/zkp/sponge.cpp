#include "zks/zkp/sponge.hpp"

#include "zks/common/rng.hpp"

namespace zks::zkp {
namespace {

constexpr std::uint64_t kConstantsSeed = 0x7a6b73656e73656cULL;

PermutationParams make_params() {
    PermutationParams params{};
    Rng rng(kConstantsSeed);
    for (auto& round : params.round_constants) {
        for (auto& c : round) {
            std::uint64_t v;
            do {
                v = rng.next_u64();
            } while (v >= Fp::kModulus);
            c = Fp(v);
        }
    }
    // circ(2, 1, 1): every square submatrix is nonsingular
    for (std::size_t i = 0; i < PermutationParams::kWidth; ++i) {
        for (std::size_t j = 0; j < PermutationParams::kWidth; ++j) {
            params.mds[i][j] = Fp(i == j ? 2 : 1);
        }
    }
    return params;
}

// x^7 with multiplication depth 3
inline Fp sbox(Fp x) {
    const Fp x2 = x * x;
    const Fp x3 = x2 * x;
    const Fp x4 = x2 * x2;
    return x4 * x3;
}

}  // namespace

const PermutationParams& permutation_params() {
    static const PermutationParams params = make_params();
    return params;
}

void permute(SpongeState& state) {
    const auto& rc = permutation_params().round_constants;
    Fp s0 = state[0], s1 = state[1], s2 = state[2];
    auto full_round = [&](std::size_t r) {
        s0 = sbox(s0 + rc[r][0]);
        s1 = sbox(s1 + rc[r][1]);
        s2 = sbox(s2 + rc[r][2]);
        // circ(2, 1, 1) applied as s_i + sum(s)
        const Fp sum = s0 + s1 + s2;
        s0 += sum;
        s1 += sum;
        s2 += sum;
    };
    constexpr std::size_t half = PermutationParams::kFullRounds / 2;
    std::size_t r = 0;
    for (; r < half; ++r) full_round(r);
    for (; r < half + PermutationParams::kPartialRounds; ++r) {
        s0 = sbox(s0 + rc[r][0]);
        s1 += rc[r][1];
        s2 += rc[r][2];
        const Fp sum = s0 + s1 + s2;
        s0 += sum;
        s1 += sum;
        s2 += sum;
    }
    for (; r < PermutationParams::kRounds; ++r) full_round(r);
    state = {s0, s1, s2};
}

Fp capacity_tag(std::size_t n_elements, Domain domain) {
    return Fp(static_cast<std::uint64_t>(n_elements) + (static_cast<std::uint64_t>(domain) << 40));
}

Fp sponge_hash(std::span<const Fp> elements, Domain domain) {
    SpongeState state{Fp::zero(), Fp::zero(), capacity_tag(elements.size(), domain)};
    std::size_t i = 0;
    do {
        for (std::size_t j = 0; j < PermutationParams::kRate && i < elements.size(); ++j, ++i) {
            state[j] += elements[i];
        }
        permute(state);
    } while (i < elements.size());
    return state[0];
}

Fp hash_pair(Fp left, Fp right, Domain domain) {
    SpongeState state{left, right, capacity_tag(2, domain)};
    permute(state);
    return state[0];
}

std::vector<Fp> pack_bytes(std::span<const std::uint8_t> bytes) {
    std::vector<Fp> out;
    out.reserve(1 + (bytes.size() + 6) / 7);
    out.emplace_back(static_cast<std::uint64_t>(bytes.size()));
    for (std::size_t i = 0; i < bytes.size(); i += 7) {
        std::uint64_t v = 0;
        for (std::size_t j = 0; j < 7 && i + j < bytes.size(); ++j) {
            v |= static_cast<std::uint64_t>(bytes[i + j]) << (8 * j);
        }
        out.emplace_back(v);
    }
    return out;
}

Fp hash_bytes(std::span<const std::uint8_t> bytes, Domain domain) {
    const auto packed = pack_bytes(bytes);
    return sponge_hash(packed, domain);
}

ChallengeStream::ChallengeStream(Fp seed)
    : state_{seed, Fp::zero(), capacity_tag(1, Domain::challenge)} {}

Fp ChallengeStream::next() {
    if (pos_ == PermutationParams::kRate) {
        permute(state_);
        pos_ = 0;
    }
    return state_[pos_++];
}

std::uint64_t ChallengeStream::next_index(std::uint64_t n) {
    return next().value() % n;
}

}  // namespace zks::zkp
