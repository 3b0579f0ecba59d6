#include <bit>
#include <set>

#include "doctest.h"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/zkp/field.hpp"
#include "zks/zkp/merkle.hpp"
#include "zks/zkp/sponge.hpp"

using namespace zks;
using namespace zks::zkp;

namespace {

// Schoolbook reference for multiplication mod p.
std::uint64_t mulmod_ref(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % Fp::kModulus);
}

Fp random_fp(Rng& rng) {
    return Fp(rng.below(Fp::kModulus));
}

}  // namespace

TEST_CASE("field arithmetic matches 128-bit reference") {
    Rng rng(1);
    const std::uint64_t p = Fp::kModulus;
    const std::uint64_t edge[] = {0, 1, 2, p - 1, p - 2, 0xFFFFFFFFULL, 0x100000000ULL, p / 2, p / 2 + 1};
    std::vector<std::uint64_t> vals(std::begin(edge), std::end(edge));
    for (int i = 0; i < 2000; ++i) vals.push_back(rng.below(p));
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const std::uint64_t a = vals[i];
        const std::uint64_t b = vals[(i * 7 + 3) % vals.size()];
        const auto sum = static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) + b) % p);
        const auto diff = static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) + p - b) % p);
        CHECK((Fp(a) + Fp(b)).value() == sum);
        CHECK((Fp(a) - Fp(b)).value() == diff);
        CHECK((Fp(a) * Fp(b)).value() == mulmod_ref(a, b));
    }
}

TEST_CASE("field axioms on random samples") {
    Rng rng(2);
    for (int i = 0; i < 500; ++i) {
        const Fp a = random_fp(rng), b = random_fp(rng), c = random_fp(rng);
        CHECK(a * (b + c) == a * b + a * c);
        CHECK((a * b) * c == a * (b * c));
        CHECK(a + (-a) == Fp::zero());
        if (a != Fp::zero()) CHECK(a * a.inverse() == Fp::one());
    }
    CHECK_THROWS_AS(Fp::zero().inverse(), ParameterError);
}

TEST_CASE("signed encoding round-trips") {
    for (std::int64_t v : {0LL, 1LL, -1LL, 127LL, -128LL, 1LL << 40, -(1LL << 40)}) {
        CHECK(Fp::from_signed(v).to_signed() == v);
    }
    CHECK(Fp::from_signed(-3) + Fp(3) == Fp::zero());
    CHECK(Fp::from_hex(Fp(0xdeadbeefULL).to_hex()) == Fp(0xdeadbeefULL));
    CHECK_THROWS_AS(Fp::from_hex("ffffffffffffffff"), FormatError);
    CHECK_THROWS_AS(Fp::from_hex("xyz"), FormatError);
}

TEST_CASE("sponge hash of the empty sequence is the declared constant") {
    CHECK(sponge_hash({}).value() == kEmptyHash);
}

TEST_CASE("permutation is a bijection on sampled states") {
    // x^7 is a permutation since gcd(7, p - 1) = 1
    CHECK(((Fp::kModulus - 1) % 7) != 0);
    Rng rng(3);
    std::set<std::uint64_t> outputs;
    for (int i = 0; i < 1000; ++i) {
        SpongeState s{random_fp(rng), random_fp(rng), random_fp(rng)};
        permute(s);
        outputs.insert(s[0].value());
    }
    CHECK(outputs.size() == 1000);
}

TEST_CASE("sponge hash has no collisions on 10^5 distinct inputs") {
    std::set<std::uint64_t> seen;
    Rng rng(4);
    for (std::uint64_t i = 0; i < 100000; ++i) {
        // mix of lengths so the length tag is exercised too
        std::vector<Fp> in;
        const std::size_t len = 1 + i % 4;
        for (std::size_t j = 0; j < len; ++j) in.emplace_back(j == 0 ? i : rng.below(1 << 20));
        seen.insert(sponge_hash(in).value());
    }
    CHECK(seen.size() == 100000);
}

TEST_CASE("single-element flip avalanches about half the output bits") {
    Rng rng(5);
    double total = 0.0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        std::vector<Fp> in{random_fp(rng), random_fp(rng), random_fp(rng), random_fp(rng)};
        const Fp h0 = sponge_hash(in);
        const std::size_t pos = rng.below(in.size());
        in[pos] += Fp(1ULL << rng.below(60));
        const Fp h1 = sponge_hash(in);
        total += std::popcount(h0.value() ^ h1.value());
    }
    const double mean_fraction = total / trials / 64.0;
    CHECK(mean_fraction >= 0.45);
    CHECK(mean_fraction <= 0.55);
}

TEST_CASE("length and domain are bound into the hash") {
    const std::vector<Fp> a{Fp(1)};
    const std::vector<Fp> b{Fp(1), Fp(0)};
    CHECK(sponge_hash(a) != sponge_hash(b));
    CHECK(sponge_hash(a, Domain::plain) != sponge_hash(a, Domain::model));
    const std::vector<std::uint8_t> x{1, 2, 3};
    const std::vector<std::uint8_t> y{1, 2, 3, 0};
    CHECK(hash_bytes(x) != hash_bytes(y));
}

TEST_CASE("challenge stream is deterministic per seed") {
    ChallengeStream s1(Fp(9)), s2(Fp(9)), s3(Fp(10));
    bool differs = false;
    for (int i = 0; i < 10; ++i) {
        const Fp a = s1.next();
        CHECK(a == s2.next());
        differs |= a != s3.next();
    }
    CHECK(differs);
}

TEST_CASE("merkle multiproof recomputes the root for random subsets") {
    Rng rng(6);
    for (std::size_t n : {1u, 2u, 3u, 7u, 8u, 33u, 100u}) {
        std::vector<Fp> leaves;
        for (std::size_t i = 0; i < n; ++i) leaves.push_back(random_fp(rng));
        const MerkleTree tree(leaves);
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<std::uint64_t> idx;
            for (std::uint64_t i = 0; i < n; ++i) {
                if (rng.uniform() < 0.3) idx.push_back(i);
            }
            if (idx.empty()) idx.push_back(rng.below(n));
            std::vector<Fp> digests;
            for (auto i : idx) digests.push_back(leaves[i]);
            const auto proof = tree.multiproof(idx);
            CHECK(proof.size() == multiproof_size(n, idx));
            const auto root = root_from_multiproof(n, idx, digests, proof);
            REQUIRE(root.has_value());
            CHECK(*root == tree.root());

            // tampering with any opened leaf changes the root
            digests[0] += Fp::one();
            const auto bad = root_from_multiproof(n, idx, digests, proof);
            CHECK((!bad || *bad != tree.root()));
        }
    }
}

TEST_CASE("merkle multiproof rejects wrong sibling counts") {
    std::vector<Fp> leaves{Fp(1), Fp(2), Fp(3), Fp(4)};
    const MerkleTree tree(leaves);
    std::vector<std::uint64_t> idx{1};
    auto proof = tree.multiproof(idx);
    CHECK(proof.size() == 2);
    proof.push_back(Fp(0));
    CHECK_FALSE(root_from_multiproof(4, idx, std::vector<Fp>{Fp(2)}, proof).has_value());
}
