#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "zks/encoder/float_model.hpp"
#include "zks/encoder/lookup.hpp"
#include "zks/signal/window.hpp"
#include "zks/zkp/field.hpp"

namespace zks::encoder {

/// Dequantization of an int8 activation: real = scale[c] * q + offset[c].
struct ActScale {
    std::vector<double> scale;
    std::vector<double> offset;

    std::size_t channels() const { return scale.size(); }
    double real(std::size_t c, std::int64_t q) const { return scale[c] * static_cast<double>(q) + offset[c]; }
};

/// Per-channel map from an integer accumulator to int8:
/// q = saturate(rq[c].apply(acc - zero[c])).
struct OutMap {
    std::vector<Requant> rq;
    std::vector<std::int64_t> zero;

    bool empty() const { return rq.empty(); }
};

/// Symmetric per-tensor weights with the input dequantization folded in;
/// the accumulator's real value is acc * w_scale.
struct QLinear {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<std::int8_t> w;
    std::vector<double> w_scale;  // per output row; uniform when the accumulator is consumed directly
    std::vector<std::int32_t> b;
    OutMap out_map;  // empty when the accumulator is consumed directly
};

struct QAttention {
    QLinear q, k, v, o;  // q and k share a single symmetric scale each
    LutInput score_pos;
};

/// a + b on int8 operands, carried with kResidualBits fraction bits.
struct QResidual {
    std::vector<Requant> ra;
    std::vector<Requant> rb;
    std::vector<std::int64_t> bias;
};

inline constexpr int kResidualBits = 16;

struct QBlock {
    QAttention temporal;
    QResidual res_t;
    QAttention spectral;
    QResidual res_s;
    QLinear gate;
    std::vector<LutInput> gate_pos;  // per channel
    Lut gate_silu;
    OutMap gate_out;
    QLinear up;
    OutMap hidden;  // from the gate * up product
    QLinear down;
    QResidual res_f;
};

struct LutReport {
    std::string name;
    double max_error = 0.0;
    double output_range = 0.0;

    double relative() const { return output_range > 0.0 ? max_error / output_range : 0.0; }
};

/// Measured at quantization time over the calibration windows.
struct QuantizationReport {
    std::vector<LutReport> luts;
    double argmax_agreement = 0.0;
    double logit_error_bound = 0.0;
    std::uint64_t calibration_saturations = 0;
};

/// Integer-only twin of a FloatModel. Only the input quantization uses
/// floating point; every later step is integer arithmetic on stored
/// multipliers, shifts and tables.
struct QuantizedModel {
    ModelConfig config;
    int bits = 8;
    ActScale input;
    QLinear stem;
    std::vector<std::int8_t> dw_kernel;  // d0 x 9
    std::vector<double> dw_scale;  // per channel
    std::vector<std::int32_t> dw_bias;
    std::vector<LutInput> stem_pos;  // per channel
    Lut stem_silu;
    OutMap stem_out;
    std::vector<QBlock> blocks;
    Lut exp_lut;
    QLinear latent;  // consumes the token sum; out_map includes the 1/n
    QLinear head;    // logits stay in the accumulator
    QLinear abstain;
    std::vector<ActScale> tap_scales;  // by tap index; empty where not materialized
    QuantizationReport report;

    std::int64_t qmax() const { return (std::int64_t{1} << (bits - 1)) - 1; }
    double logit_scale() const { return head.w_scale.front(); }

    std::vector<std::uint8_t> backbone_bytes() const;
    std::vector<std::uint8_t> head_bytes() const;
    /// Canonical serialization: magic, version, config, backbone, head, report.
    std::vector<std::uint8_t> serialize() const;
    static QuantizedModel deserialize(std::span<const std::uint8_t> bytes);

    zkp::Fp model_hash() const;
    zkp::Fp backbone_hash() const;
    zkp::Fp head_hash() const;
};

/// Maps a logit margin to a confidence in 1/128 units through 256 buckets
/// of width 2^shift accumulator units: u(m) = 1 / (1 + (K - 1) exp(-m / T))
/// at each bucket's lower edge, floored. Margins clamp at max_margin.
struct ConfidenceTable {
    int shift = 0;
    std::int64_t max_margin = 0;  // 256 * 2^shift - 1
    std::vector<std::int32_t> values;  // 256 non-decreasing entries in 0..128

    static constexpr int kBuckets = 256;
    static constexpr int kScale = 128;

    static ConfidenceTable build(double logit_scale, double temperature, std::size_t n_classes);
    std::int32_t lookup(std::int64_t margin) const;
};

/// Surrogate confidence for a real-valued logit margin.
double margin_confidence(double margin, double temperature, std::size_t n_classes);

struct QuantizedOutput {
    std::vector<std::int64_t> logits;  // accumulator values, real = logits * logit_scale
    std::vector<std::int8_t> latent;
    std::int64_t margin = 0;  // top-1 minus top-2
    std::size_t top = 0;
    std::int32_t u_q = 0;  // confidence in 1/128 units; 0 without a table
    double u_raw = 0.0;    // abstain head, dequantized
    std::uint64_t saturations = 0;
};

/// Sees int8 activations with their dequantization, at the float model's taps.
using QuantObserver = std::function<void(int tap_index, std::span<const std::int8_t> values, const ActScale& scale)>;

QuantizedOutput forward_quantized(const QuantizedModel& qm, const signal::Window& w,
                                  const ConfidenceTable* confidence = nullptr, const QuantObserver& observe = {});

/// Integer head on a given latent, shared with the circuit.
std::vector<std::int64_t> head_logits(const QuantizedModel& qm, std::span<const std::int8_t> latent);

/// Lowest-index argmax, and top-1 minus top-2 margin.
std::pair<std::size_t, std::int64_t> top_margin(std::span<const std::int64_t> logits);

QuantizedModel quantize_model(const FloatModel& m, std::span<const signal::Window> calib, int bits = 8);

}  // namespace zks::encoder
