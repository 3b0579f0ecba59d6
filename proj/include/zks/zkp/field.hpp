#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace zks::zkp {

/// Element of the prime field with p = 2^64 - 2^32 + 1.
///
/// Values are kept canonical in [0, p). Signed integers map to their
/// residues, so small negative fixed-point values become p - |x|.
class Fp {
public:
    static constexpr std::uint64_t kModulus = 0xFFFFFFFF00000001ULL;

    constexpr Fp() = default;
    constexpr explicit Fp(std::uint64_t v) : v_(v >= kModulus ? v - kModulus : v) {}

    static constexpr Fp zero() { return Fp(); }
    static constexpr Fp one() { return Fp(1); }
    static Fp from_signed(std::int64_t v);

    constexpr std::uint64_t value() const { return v_; }
    // Centered representative, valid when the element encodes |x| < 2^63.
    std::int64_t to_signed() const;

    // Branch-free: carries become masks so random operands do not stall.
    friend constexpr Fp operator+(Fp a, Fp b) {
        // a + b with a, b < p; add 2^32 - 1 on wrap past 2^64
        const std::uint64_t s = a.v_ + b.v_;
        const std::uint64_t wrapped = 0ULL - static_cast<std::uint64_t>(s < a.v_);
        return canonical(s + (wrapped & 0xFFFFFFFFULL));
    }
    friend constexpr Fp operator-(Fp a, Fp b) {
        const std::uint64_t d = a.v_ - b.v_;
        const std::uint64_t borrow = 0ULL - static_cast<std::uint64_t>(a.v_ < b.v_);
        // borrow took 2^64 = p + (2^32 - 1); give back 2^32 - 1
        Fp r;
        r.v_ = d - (borrow & 0xFFFFFFFFULL);
        return r;
    }
    constexpr Fp operator-() const { return Fp() - *this; }
    friend Fp operator*(Fp a, Fp b) { return reduce128(static_cast<unsigned __int128>(a.v_) * b.v_); }

    Fp& operator+=(Fp o) { return *this = *this + o; }
    Fp& operator-=(Fp o) { return *this = *this - o; }
    Fp& operator*=(Fp o) { return *this = *this * o; }

    friend constexpr bool operator==(Fp a, Fp b) { return a.v_ == b.v_; }
    friend constexpr auto operator<=>(Fp a, Fp b) { return a.v_ <=> b.v_; }

    Fp pow(std::uint64_t e) const;
    // Throws ParameterError on zero.
    Fp inverse() const;

    std::string to_hex() const;
    static Fp from_hex(std::string_view hex);

private:
    static constexpr Fp canonical(std::uint64_t v) {
        const std::uint64_t ge = 0ULL - static_cast<std::uint64_t>(v >= kModulus);
        Fp r;
        r.v_ = v - (ge & kModulus);
        return r;
    }

    static Fp reduce128(unsigned __int128 x) {
        const auto lo = static_cast<std::uint64_t>(x);
        const auto hi = static_cast<std::uint64_t>(x >> 64);
        const std::uint64_t hi_hi = hi >> 32;
        const std::uint64_t hi_lo = hi & 0xFFFFFFFFULL;
        // x = lo + hi_lo * 2^64 + hi_hi * 2^96, with 2^64 = 2^32 - 1 and 2^96 = -1
        std::uint64_t t0 = lo - hi_hi;
        t0 -= (0ULL - static_cast<std::uint64_t>(lo < hi_hi)) & 0xFFFFFFFFULL;
        const std::uint64_t t1 = (hi_lo << 32) - hi_lo;
        const std::uint64_t r = t0 + t1;
        return canonical(r + ((0ULL - static_cast<std::uint64_t>(r < t0)) & 0xFFFFFFFFULL));
    }

    std::uint64_t v_ = 0;
};

}  // namespace zks::zkp
