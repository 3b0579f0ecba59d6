#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace zks::encoder {

/// Fixed-point rescale: apply(acc) = round(acc * ratio) via a 31-bit
/// multiplier and a right shift, ties rounded up.
struct Requant {
    std::int64_t mult = 0;
    int shift = 1;

    static Requant from_ratio(double ratio);
    std::int64_t apply(std::int64_t acc) const { return (acc * mult + (std::int64_t{1} << (shift - 1))) >> shift; }
};

/// Round-to-nearest integer division, b > 0, symmetric in the sign of a.
std::int64_t div_round(std::int64_t a, std::int64_t b);

/// Clamps to [-qmax, qmax], counting clamps.
std::int8_t saturate(std::int64_t v, std::int64_t qmax, std::uint64_t& saturations);

inline constexpr int kLutFracBits = 16;
inline constexpr int kLutOutExtraBits = 8;

/// Piecewise-linear table of 2^q samples at lo + i * step. Entries are
/// integers in units of out_unit. Inputs outside [lo, lo + (2^q - 1) step]
/// are clamped.
struct Lut {
    double lo = 0.0;
    double step = 1.0;
    double out_unit = 1.0;
    std::vector<std::int32_t> entries;

    double hi() const { return lo + step * static_cast<double>(entries.size() - 1); }
    // Real-valued interpolation of the stored entries.
    double eval(double x) const;
    // Integer interpolation; pos is (x - lo) / step with kLutFracBits fraction bits.
    std::int64_t eval_fixed(std::int64_t pos, bool& clamped) const;
};

double lut_step(double lo, double hi, int q);

Lut make_lut(const std::function<double(double)>& f, double lo, double step, int q, double out_unit);

/// Max |eval(x) - f(x)| over the inputs.
double lut_max_error(const Lut& lut, const std::function<double(double)>& f, std::span<const double> inputs);

/// Maps an integer accumulator of real scale in_scale onto a table's fixed
/// position grid.
struct LutInput {
    Requant to_pos;
    std::int64_t offset = 0;

    static LutInput make(const Lut& lut, double in_scale);
    std::int64_t pos(std::int64_t acc) const { return to_pos.apply(acc) - offset; }
};

}  // namespace zks::encoder
