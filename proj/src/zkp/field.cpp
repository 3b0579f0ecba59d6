#include "zks/zkp/field.hpp"

#include <cstdio>

#include "zks/common/errors.hpp"

namespace zks::zkp {

Fp Fp::from_signed(std::int64_t v) {
    if (v >= 0) return Fp(static_cast<std::uint64_t>(v));
    // -v may not fit for INT64_MIN; go through unsigned arithmetic
    const std::uint64_t mag = 0ULL - static_cast<std::uint64_t>(v);
    return Fp() - Fp(mag);
}

std::int64_t Fp::to_signed() const {
    if (v_ <= kModulus / 2) return static_cast<std::int64_t>(v_);
    return -static_cast<std::int64_t>(kModulus - v_);
}

Fp Fp::pow(std::uint64_t e) const {
    Fp base = *this;
    Fp acc = one();
    while (e != 0) {
        if (e & 1) acc *= base;
        base *= base;
        e >>= 1;
    }
    return acc;
}

Fp Fp::inverse() const {
    if (v_ == 0) throw ParameterError("inverse of zero field element");
    return pow(kModulus - 2);
}

std::string Fp::to_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v_));
    return std::string(buf, 16);
}

Fp Fp::from_hex(std::string_view hex) {
    if (hex.empty() || hex.size() > 16) throw FormatError("field element hex must be 1..16 digits");
    std::uint64_t v = 0;
    for (char c : hex) {
        v <<= 4;
        if (c >= '0' && c <= '9') {
            v |= static_cast<std::uint64_t>(c - '0');
        } else if (c >= 'a' && c <= 'f') {
            v |= static_cast<std::uint64_t>(c - 'a' + 10);
        } else {
            throw FormatError("invalid hex digit in field element");
        }
    }
    if (v >= kModulus) throw FormatError("non-canonical field element");
    return Fp(v);
}

}  // namespace zks::zkp
