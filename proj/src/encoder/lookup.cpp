#include "zks/encoder/lookup.hpp"

#include <algorithm>
#include <cmath>

#include "zks/common/errors.hpp"

namespace zks::encoder {

Requant Requant::from_ratio(double ratio) {
    if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw QuantizationError("rescale ratio must be finite and non-negative");
    Requant r;
    if (ratio == 0.0) return r;
    int e = 0;
    const double m = std::frexp(ratio, &e);
    std::int64_t mult = std::llround(std::ldexp(m, 31));
    if (mult == (std::int64_t{1} << 31)) {
        mult >>= 1;
        ++e;
    }
    int shift = 31 - e;
    while (shift > 62) {
        mult >>= 1;
        --shift;
    }
    if (shift < 1) throw QuantizationError("rescale ratio too large for the fixed-point multiplier");
    r.mult = mult;
    r.shift = shift;
    return r;
}

std::int64_t div_round(std::int64_t a, std::int64_t b) {
    if (a >= 0) return (a + b / 2) / b;
    return -((-a + b / 2) / b);
}

std::int8_t saturate(std::int64_t v, std::int64_t qmax, std::uint64_t& saturations) {
    if (v > qmax) {
        ++saturations;
        return static_cast<std::int8_t>(qmax);
    }
    if (v < -qmax) {
        ++saturations;
        return static_cast<std::int8_t>(-qmax);
    }
    return static_cast<std::int8_t>(v);
}

double Lut::eval(double x) const {
    const double last = static_cast<double>(entries.size() - 1);
    const double pos = std::clamp((x - lo) / step, 0.0, last);
    const std::size_t i = std::min(static_cast<std::size_t>(pos), entries.size() - 2);
    const double frac = pos - static_cast<double>(i);
    const double a = entries[i], b = entries[i + 1];
    return (a + (b - a) * frac) * out_unit;
}

std::int64_t Lut::eval_fixed(std::int64_t pos, bool& clamped) const {
    const std::int64_t last = static_cast<std::int64_t>(entries.size() - 1) << kLutFracBits;
    clamped = pos < 0 || pos > last;
    pos = std::clamp<std::int64_t>(pos, 0, last);
    const std::int64_t i = std::min<std::int64_t>(pos >> kLutFracBits, static_cast<std::int64_t>(entries.size()) - 2);
    const std::int64_t frac = pos - (i << kLutFracBits);
    const std::int64_t a = entries[static_cast<std::size_t>(i)];
    const std::int64_t b = entries[static_cast<std::size_t>(i + 1)];
    return a + (((b - a) * frac + (std::int64_t{1} << (kLutFracBits - 1))) >> kLutFracBits);
}

double lut_step(double lo, double hi, int q) {
    if (!(hi > lo) || q < 1 || q > 16) throw QuantizationError("lookup range must be non-empty and q in 1..16");
    return (hi - lo) / std::ldexp(1.0, q);
}

Lut make_lut(const std::function<double(double)>& f, double lo, double step, int q, double out_unit) {
    if (!(step > 0.0) || !(out_unit > 0.0) || q < 1 || q > 16) throw QuantizationError("invalid lookup table parameters");
    Lut lut;
    lut.lo = lo;
    lut.step = step;
    lut.out_unit = out_unit;
    const std::size_t n = std::size_t{1} << q;
    lut.entries.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::nearbyint(f(lo + step * static_cast<double>(i)) / out_unit);
        if (std::abs(v) > 2147483647.0) throw QuantizationError("lookup entry exceeds 32 bits");
        lut.entries[i] = static_cast<std::int32_t>(v);
    }
    return lut;
}

double lut_max_error(const Lut& lut, const std::function<double(double)>& f, std::span<const double> inputs) {
    double err = 0.0;
    for (double x : inputs) err = std::max(err, std::abs(lut.eval(x) - f(x)));
    return err;
}

LutInput LutInput::make(const Lut& lut, double in_scale) {
    LutInput in;
    const double unit = std::ldexp(1.0, kLutFracBits) / lut.step;
    in.to_pos = Requant::from_ratio(in_scale * unit);
    in.offset = std::llround(lut.lo * unit);
    return in;
}

}  // namespace zks::encoder
