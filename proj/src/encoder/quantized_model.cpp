#include "zks/encoder/quantized_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zks/common/errors.hpp"

namespace zks::encoder {
namespace {

using I8 = std::vector<std::int8_t>;

template <typename Acc>
I8 map_out(const std::vector<Acc>& acc, const OutMap& m, std::int64_t qmax, std::uint64_t& sat) {
    const std::size_t C = m.rq.size();
    I8 out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        const std::size_t c = i % C;
        out[i] = saturate(m.rq[c].apply(static_cast<std::int64_t>(acc[i]) - m.zero[c]), qmax, sat);
    }
    return out;
}

std::vector<std::int32_t> linear_acc(const I8& x, std::size_t n, const QLinear& l) {
    std::vector<std::int32_t> acc(n * l.out);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int8_t* xi = x.data() + i * l.in;
        for (std::size_t o = 0; o < l.out; ++o) {
            const std::int8_t* wo = l.w.data() + o * l.in;
            std::int32_t a = l.b[o];
            for (std::size_t c = 0; c < l.in; ++c) a += static_cast<std::int32_t>(wo[c]) * xi[c];
            acc[i * l.out + o] = a;
        }
    }
    return acc;
}

I8 linear_q(const I8& x, std::size_t n, const QLinear& l, std::int64_t qmax, std::uint64_t& sat) {
    return map_out(linear_acc(x, n, l), l.out_map, qmax, sat);
}

I8 lut_q(const std::vector<std::int32_t>& acc, const std::vector<LutInput>& in, const Lut& lut, const OutMap& out_map,
         std::int64_t qmax, std::uint64_t& sat) {
    std::vector<std::int64_t> v(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        bool clamped = false;
        v[i] = lut.eval_fixed(in[i % in.size()].pos(acc[i]), clamped);
        sat += clamped;
    }
    return map_out(v, out_map, qmax, sat);
}

I8 attention_q(const I8& x, std::size_t n, std::size_t d, const std::vector<std::vector<std::size_t>>& groups,
               const QAttention& a, const Lut& exp_lut, std::int64_t qmax, std::uint64_t& sat, I8* q_out, I8* k_out,
               I8* v_out) {
    I8 q = linear_q(x, n, a.q, qmax, sat);
    I8 k = linear_q(x, n, a.k, qmax, sat);
    I8 v = linear_q(x, n, a.v, qmax, sat);
    std::vector<std::int32_t> score;
    std::vector<std::int64_t> p, num(d);
    I8 mixed(n * d);
    for (const auto& g : groups) {
        score.resize(g.size());
        p.resize(g.size());
        for (std::size_t i : g) {
            std::int32_t mx = std::numeric_limits<std::int32_t>::min();
            for (std::size_t j = 0; j < g.size(); ++j) {
                std::int32_t s = 0;
                for (std::size_t c = 0; c < d; ++c) s += static_cast<std::int32_t>(q[i * d + c]) * k[g[j] * d + c];
                score[j] = s;
                mx = std::max(mx, s);
            }
            std::int64_t den = 0;
            for (std::size_t j = 0; j < g.size(); ++j) {
                bool clamped = false;
                p[j] = exp_lut.eval_fixed(a.score_pos.pos(score[j] - mx), clamped);
                den += p[j];
            }
            std::fill(num.begin(), num.end(), 0);
            for (std::size_t j = 0; j < g.size(); ++j) {
                for (std::size_t c = 0; c < d; ++c) num[c] += p[j] * v[g[j] * d + c];
            }
            // a convex combination stays in v's range and dequantizes with v's scale
            for (std::size_t c = 0; c < d; ++c) mixed[i * d + c] = static_cast<std::int8_t>(div_round(num[c], den));
        }
    }
    if (q_out) *q_out = std::move(q);
    if (k_out) *k_out = std::move(k);
    if (v_out) *v_out = std::move(v);
    return linear_q(mixed, n, a.o, qmax, sat);
}

I8 residual_q(const I8& a, const I8& b, const QResidual& r, std::int64_t qmax, std::uint64_t& sat) {
    const std::size_t C = r.ra.size();
    constexpr std::int64_t half = std::int64_t{1} << (kResidualBits - 1);
    I8 out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t c = i % C;
        const std::int64_t t = r.ra[c].apply(a[i]) + r.rb[c].apply(b[i]) + r.bias[c];
        out[i] = saturate((t + half) >> kResidualBits, qmax, sat);
    }
    return out;
}

// ---- quantization -------------------------------------------------------

struct ChannelRange {
    std::vector<double> lo, hi, sum;
    std::size_t rows = 0;

    void add(std::span<const double> v, std::size_t channels) {
        if (lo.empty()) {
            lo.assign(channels, std::numeric_limits<double>::infinity());
            hi.assign(channels, -std::numeric_limits<double>::infinity());
            sum.assign(channels, 0.0);
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            lo[i % channels] = std::min(lo[i % channels], v[i]);
            hi[i % channels] = std::max(hi[i % channels], v[i]);
            sum[i % channels] += v[i];
        }
        rows += v.size() / channels;
    }
    std::vector<double> mean() const {
        std::vector<double> m(sum);
        for (auto& v : m) v /= static_cast<double>(rows);
        return m;
    }
    double min() const { return *std::min_element(lo.begin(), lo.end()); }
    double max() const { return *std::max_element(hi.begin(), hi.end()); }
};

// Per-channel histogram over a known [lo, hi], used to trim rare outliers
// from the quantization range.
struct ChannelHistogram {
    static constexpr std::size_t kBins = 2048;
    const ChannelRange* range = nullptr;
    std::vector<std::uint64_t> counts;  // channel-major
    std::vector<std::uint64_t> totals;

    void add(std::span<const double> v, std::size_t channels) {
        if (counts.empty()) {
            counts.assign(channels * kBins, 0);
            totals.assign(channels, 0);
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::size_t c = i % channels;
            const double span = range->hi[c] - range->lo[c];
            std::size_t b = 0;
            if (span > 0.0) {
                b = std::min(kBins - 1, static_cast<std::size_t>((v[i] - range->lo[c]) / span * static_cast<double>(kBins)));
            }
            ++counts[c * kBins + b];
            ++totals[c];
        }
    }

    // Range keeping all but a `tail` fraction on each side.
    ChannelRange trimmed(double tail) const {
        ChannelRange r = *range;
        for (std::size_t c = 0; c < totals.size(); ++c) {
            const double span = range->hi[c] - range->lo[c];
            if (!(span > 0.0)) continue;
            const auto cut = static_cast<std::uint64_t>(tail * static_cast<double>(totals[c]));
            const double w = span / static_cast<double>(kBins);
            std::uint64_t acc = 0;
            std::size_t b = 0;
            while (b < kBins && acc + counts[c * kBins + b] <= cut) acc += counts[c * kBins + b++];
            r.lo[c] = range->lo[c] + w * static_cast<double>(b);
            acc = 0;
            b = kBins;
            while (b > 0 && acc + counts[c * kBins + b - 1] <= cut) acc += counts[c * kBins + --b];
            r.hi[c] = range->lo[c] + w * static_cast<double>(b);
            if (!(r.hi[c] > r.lo[c])) r.hi[c] = r.lo[c] + w;
        }
        return r;
    }
};

enum class Mode { affine, symmetric, tensor };

constexpr double kRangeMargin = 0.02;
constexpr double kTailFraction = 1e-4;

ActScale act_scale(const ChannelRange& r, Mode mode, std::int64_t qmax, const std::string& what) {
    if (r.lo.empty()) throw QuantizationError("no calibration data at " + what);
    const std::size_t C = r.lo.size();
    if (!(r.max() > r.min()) || !std::isfinite(r.max() - r.min())) {
        throw QuantizationError("calibration range is degenerate at " + what);
    }
    const double q = static_cast<double>(qmax);
    ActScale s;
    s.scale.resize(C);
    s.offset.assign(C, 0.0);
    const double tensor_abs = std::max(std::abs(r.min()), std::abs(r.max())) * (1.0 + kRangeMargin);
    for (std::size_t c = 0; c < C; ++c) {
        const double span = r.hi[c] - r.lo[c];
        const double lo = r.lo[c] - kRangeMargin * span, hi = r.hi[c] + kRangeMargin * span;
        switch (mode) {
            case Mode::affine:
                s.scale[c] = 0.5 * (hi - lo) / q;
                // real zero stays exactly representable; the margin absorbs the shift
                s.offset[c] = s.scale[c] > 0.0 ? s.scale[c] * std::nearbyint(0.5 * (lo + hi) / s.scale[c]) : lo;
                break;
            case Mode::symmetric:
                s.scale[c] = std::max(std::abs(lo), std::abs(hi)) / q;
                break;
            case Mode::tensor:
                s.scale[c] = tensor_abs / q;
                break;
        }
        // a constant channel still needs a positive step
        if (!(s.scale[c] > 0.0)) s.scale[c] = std::max(std::abs(s.offset[c]), 1.0) * 1e-6;
    }
    return s;
}

std::int8_t quant_weight(double v, double scale, std::int64_t qmax) {
    const double q = std::clamp(std::nearbyint(v / scale), -static_cast<double>(qmax), static_cast<double>(qmax));
    return static_cast<std::int8_t>(q);
}

std::int32_t quant_bias(double v, double scale) {
    const double q = std::nearbyint(v / scale);
    if (!(std::abs(q) <= 2147483647.0)) throw QuantizationError("bias does not fit in 32 bits");
    return static_cast<std::int32_t>(q);
}

std::int64_t quant_zero(double v, double unit) {
    const double q = std::nearbyint(v / unit);
    if (!(std::abs(q) <= 9.0e15)) throw QuantizationError("zero offset does not fit in 53 bits");
    return static_cast<std::int64_t>(q);
}

double tensor_scale(std::span<const double> v, std::int64_t qmax) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m > 0.0 ? m / static_cast<double>(qmax) : 1.0;
}

// Accumulator of real scale acc_unit -> int8 activation with scale `out`.
OutMap make_out_map(double acc_unit, const ActScale& out) {
    OutMap m;
    for (std::size_t c = 0; c < out.channels(); ++c) {
        m.rq.push_back(Requant::from_ratio(acc_unit / out.scale[c]));
        m.zero.push_back(quant_zero(out.offset[c], acc_unit));
    }
    return m;
}

// Folds the input dequantization and an optional per-channel affine
// (applied to the input first) into the weights.
// in_mean is the calibration mean of the input; the weight rounding error
// it would carry on average is moved into the bias.
QLinear quant_linear(const Linear& l, const ActScale& in, std::span<const double> in_mean, const Affine* pre,
                     const ActScale* out, std::int64_t qmax, double acc_div = 1.0, bool per_row_raw = false) {
    // head rows share one scale so that raw logits compare directly
    const bool per_row = out != nullptr || per_row_raw;
    const std::size_t I = l.in(), O = l.out();
    if (in.channels() != I) throw QuantizationError("input scale width does not match layer");
    std::vector<double> w_eff(I * O), b_eff(l.b);
    for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t c = 0; c < I; ++c) {
            const double g = pre ? pre->gamma[c] : 1.0;
            const double beta = pre ? pre->beta[c] : 0.0;
            w_eff[o * I + c] = l.w(o, c) * g * in.scale[c];
            b_eff[o] += l.w(o, c) * (g * in.offset[c] + beta);
        }
    }
    QLinear q;
    q.in = I;
    q.out = O;
    const double tensor = tensor_scale(w_eff, qmax);
    for (std::size_t o = 0; o < O; ++o) {
        const std::span<const double> row(w_eff.data() + o * I, I);
        const double ws = per_row ? tensor_scale(row, qmax) : tensor;
        q.w_scale.push_back(ws);
        for (std::size_t c = 0; c < I; ++c) {
            q.w.push_back(quant_weight(row[c], ws, qmax));
            const double dw = row[c] - ws * q.w.back();
            b_eff[o] += dw * (in_mean[c] - in.offset[c]) / in.scale[c];
        }
        q.b.push_back(quant_bias(b_eff[o], ws));
    }
    if (out) {
        for (std::size_t o = 0; o < O; ++o) {
            const ActScale one{{out->scale[o]}, {out->offset[o]}};
            const OutMap m = make_out_map(q.w_scale[o] / acc_div, one);
            q.out_map.rq.push_back(m.rq[0]);
            q.out_map.zero.push_back(m.zero[0]);
        }
    }
    return q;
}

QResidual make_residual(const ActScale& a, const ActScale& b, const ActScale& out) {
    QResidual r;
    const double unit = std::ldexp(1.0, kResidualBits);
    for (std::size_t c = 0; c < out.channels(); ++c) {
        r.ra.push_back(Requant::from_ratio(a.scale[c] / out.scale[c] * unit));
        r.rb.push_back(Requant::from_ratio(b.scale[c] / out.scale[c] * unit));
        r.bias.push_back(quant_zero((a.offset[c] + b.offset[c] - out.offset[c]) / out.scale[c], 1.0 / unit));
    }
    return r;
}

double min_scale(const ActScale& s) { return *std::min_element(s.scale.begin(), s.scale.end()); }

Lut silu_lut(const ChannelRange& r, int bits, double out_unit) {
    const double lo = r.min(), hi = r.max();
    if (!(hi > lo)) throw QuantizationError("calibration range is degenerate at a SiLU input");
    const double step = (hi - lo) / static_cast<double>((1 << bits) - 3);
    return make_lut(silu, lo - step, step, bits, out_unit);
}

Lut exp_table(int bits) {
    const double step = 8.0 / static_cast<double>(1 << bits);
    const double lo = -step * static_cast<double>((1 << bits) - 1);
    return make_lut([](double x) { return std::exp(x); }, lo, step, bits, std::ldexp(1.0, -15));
}

struct ErrorAcc {
    const Lut* lut = nullptr;
    double max_error = 0.0;
    double f_lo = std::numeric_limits<double>::infinity();
    double f_hi = -std::numeric_limits<double>::infinity();

    void add(std::span<const double> xs) {
        for (double x : xs) {
            const double f = silu(x);
            f_lo = std::min(f_lo, f);
            f_hi = std::max(f_hi, f);
            max_error = std::max(max_error, std::abs(lut->eval(x) - f));
        }
    }
};

}  // namespace

std::vector<std::int64_t> head_logits(const QuantizedModel& qm, std::span<const std::int8_t> latent) {
    const auto& h = qm.head;
    if (latent.size() != h.in) throw ParameterError("latent width does not match the head");
    std::vector<std::int64_t> out(h.out);
    for (std::size_t o = 0; o < h.out; ++o) {
        std::int64_t a = h.b[o];
        for (std::size_t c = 0; c < h.in; ++c) a += static_cast<std::int64_t>(h.w[o * h.in + c]) * latent[c];
        out[o] = a;
    }
    return out;
}

std::pair<std::size_t, std::int64_t> top_margin(std::span<const std::int64_t> logits) {
    std::size_t top = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[top]) top = i;
    }
    std::int64_t second = std::numeric_limits<std::int64_t>::min();
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (i != top) second = std::max(second, logits[i]);
    }
    return {top, logits[top] - second};
}

double margin_confidence(double margin, double temperature, std::size_t n_classes) {
    return 1.0 / (1.0 + static_cast<double>(n_classes - 1) * std::exp(-margin / temperature));
}

ConfidenceTable ConfidenceTable::build(double logit_scale, double temperature, std::size_t n_classes) {
    if (!(logit_scale > 0.0) || !(temperature > 0.0) || n_classes < 2) {
        throw ParameterError("confidence table needs positive scale, temperature and K >= 2");
    }
    // beyond this margin the floored confidence no longer changes
    const double cap =
        temperature * std::log(static_cast<double>(kScale) * static_cast<double>(n_classes - 1)) + temperature;
    ConfidenceTable t;
    while (static_cast<double>(kBuckets) * std::ldexp(1.0, t.shift) * logit_scale < cap) {
        if (++t.shift > 40) throw ParameterError("logit scale too small for the confidence table");
    }
    t.max_margin = (std::int64_t{kBuckets} << t.shift) - 1;
    t.values.resize(kBuckets);
    for (int i = 0; i < kBuckets; ++i) {
        const double m = std::ldexp(static_cast<double>(i), t.shift) * logit_scale;
        t.values[static_cast<std::size_t>(i)] =
            static_cast<std::int32_t>(std::floor(margin_confidence(m, temperature, n_classes) * kScale));
    }
    return t;
}

std::int32_t ConfidenceTable::lookup(std::int64_t margin) const {
    const std::int64_t m = std::clamp<std::int64_t>(margin, 0, max_margin);
    return values[static_cast<std::size_t>(m >> shift)];
}

QuantizedOutput forward_quantized(const QuantizedModel& qm, const signal::Window& w, const ConfidenceTable* confidence,
                                  const QuantObserver& observe) {
    const auto& cfg = qm.config;
    if (w.frames() != cfg.frames || w.subcarriers() != cfg.subcarriers) {
        throw ParameterError("window shape does not match the model config");
    }
    const std::size_t T = cfg.frames, S = cfg.subcarriers, d = cfg.d0, n = cfg.tokens();
    const std::int64_t qmax = qm.qmax();
    QuantizedOutput out;
    std::uint64_t& sat = out.saturations;
    auto emit = [&](Tap tap, std::size_t b, const I8& v) {
        if (observe) {
            const auto idx = tap_index(tap, b);
            observe(idx, v, qm.tap_scales[static_cast<std::size_t>(idx)]);
        }
    };

    I8 x(w.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t c = i % 2;
        const double v = std::nearbyint((w.data()[i] - qm.input.offset[c]) / qm.input.scale[c]);
        x[i] = saturate(static_cast<std::int64_t>(std::clamp(v, -1e9, 1e9)), qmax, sat);
    }
    emit(Tap::input, 0, x);

    const I8 h = linear_q(x, n, qm.stem, qmax, sat);
    emit(Tap::stem, 0, h);
    std::vector<std::int32_t> conv(n * d);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t c = 0; c < d; ++c) {
                std::int32_t acc = qm.dw_bias[c];
                for (int dt = -1; dt <= 1; ++dt) {
                    const std::size_t tt = clamp_index(t, dt, T);
                    for (int ds = -1; ds <= 1; ++ds) {
                        const std::size_t ss = clamp_index(s, ds, S);
                        acc += static_cast<std::int32_t>(qm.dw_kernel[c * 9 + static_cast<std::size_t>((dt + 1) * 3 + ds + 1)]) *
                               h[(tt * S + ss) * d + c];
                    }
                }
                conv[(t * S + s) * d + c] = acc;
            }
        }
    }
    I8 a = lut_q(conv, qm.stem_pos, qm.stem_silu, qm.stem_out, qmax, sat);
    emit(Tap::act0, 0, a);

    const auto tgroups = temporal_groups(T, S, cfg.w_t);
    const auto sgroups = subcarrier_groups(T, S, cfg.group);
    I8 qv, kv, vv;
    I8* qp = observe ? &qv : nullptr;
    I8* kp = observe ? &kv : nullptr;
    I8* vp = observe ? &vv : nullptr;
    for (std::size_t bi = 0; bi < qm.blocks.size(); ++bi) {
        const auto& b = qm.blocks[bi];
        const I8 ot = attention_q(a, n, d, tgroups, b.temporal, qm.exp_lut, qmax, sat, qp, kp, vp);
        emit(Tap::q_t, bi, qv);
        emit(Tap::k_t, bi, kv);
        emit(Tap::v_t, bi, vv);
        emit(Tap::out_t, bi, ot);
        a = residual_q(a, ot, b.res_t, qmax, sat);
        emit(Tap::res_t, bi, a);

        const I8 os = attention_q(a, n, d, sgroups, b.spectral, qm.exp_lut, qmax, sat, qp, kp, vp);
        emit(Tap::q_s, bi, qv);
        emit(Tap::k_s, bi, kv);
        emit(Tap::v_s, bi, vv);
        emit(Tap::out_s, bi, os);
        a = residual_q(a, os, b.res_s, qmax, sat);
        emit(Tap::res_s, bi, a);

        const I8 g = lut_q(linear_acc(a, n, b.gate), b.gate_pos, b.gate_silu, b.gate_out, qmax, sat);
        emit(Tap::gate_act, bi, g);
        const I8 u = linear_q(a, n, b.up, qmax, sat);
        emit(Tap::up, bi, u);
        std::vector<std::int32_t> prod(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) prod[i] = static_cast<std::int32_t>(g[i]) * u[i];
        const I8 hid = map_out(prod, b.hidden, qmax, sat);
        emit(Tap::hidden, bi, hid);
        const I8 dn = linear_q(hid, n, b.down, qmax, sat);
        emit(Tap::down, bi, dn);
        a = residual_q(a, dn, b.res_f, qmax, sat);
        emit(Tap::res_f, bi, a);
    }

    // latent map on the exact token sum: acc = n b + W sum
    std::vector<std::int64_t> pooled(d, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) pooled[c] += a[i * d + c];
    }
    const auto& lat = qm.latent;
    std::vector<std::int64_t> lat_acc(lat.out);
    for (std::size_t o = 0; o < lat.out; ++o) {
        std::int64_t acc = static_cast<std::int64_t>(lat.b[o]) * static_cast<std::int64_t>(n);
        for (std::size_t c = 0; c < d; ++c) acc += static_cast<std::int64_t>(lat.w[o * d + c]) * pooled[c];
        lat_acc[o] = acc;
    }
    out.latent = map_out(lat_acc, lat.out_map, qmax, sat);
    emit(Tap::latent, qm.blocks.size() - 1, out.latent);

    out.logits = head_logits(qm, out.latent);
    const auto [top, margin] = top_margin(out.logits);
    out.top = top;
    out.margin = margin;
    if (confidence) out.u_q = confidence->lookup(margin);
    const auto u_acc = linear_acc(out.latent, 1, qm.abstain);
    out.u_raw = static_cast<double>(u_acc[0]) * qm.abstain.w_scale.front();
    return out;
}

QuantizedModel quantize_model(const FloatModel& m, std::span<const signal::Window> calib, int bits) {
    m.validate();
    if (calib.empty()) throw ParameterError("quantization needs calibration windows");
    if (bits < 4 || bits > 8) throw ParameterError("quantizer bit width must be in 4..8");
    const std::size_t nb = m.blocks.size();
    const std::size_t n = m.config.tokens();
    const std::int64_t qmax = (std::int64_t{1} << (bits - 1)) - 1;
    const std::size_t pooled_tap = static_cast<std::size_t>(tap_index(Tap::pooled, nb - 1));

    std::vector<ChannelRange> ranges(tap_count(nb));
    const Observer range_obs = [&](int idx, std::span<const double> v) {
        const auto i = static_cast<std::size_t>(idx);
        ranges[i].add(v, i >= pooled_tap ? v.size() : v.size() / n);
    };
    for (const auto& w : calib) forward(m, w, range_obs);
    std::vector<ChannelHistogram> hists(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) hists[i].range = &ranges[i];
    const Observer hist_obs = [&](int idx, std::span<const double> v) {
        const auto i = static_cast<std::size_t>(idx);
        hists[i].add(v, i >= pooled_tap ? v.size() : v.size() / n);
    };
    for (const auto& w : calib) forward(m, w, hist_obs);
    std::vector<ChannelRange> clipped(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (!ranges[i].lo.empty()) clipped[i] = hists[i].trimmed(i >= pooled_tap ? 0.0 : kTailFraction);
    }

    QuantizedModel qm;
    qm.config = m.config;
    qm.bits = bits;
    qm.tap_scales.resize(tap_count(nb));
    auto sc = [&](Tap tap, std::size_t b, Mode mode) -> const ActScale& {
        const auto i = static_cast<std::size_t>(tap_index(tap, b));
        qm.tap_scales[i] = act_scale(clipped[i], mode, qmax, "tap " + std::to_string(i));
        return qm.tap_scales[i];
    };
    auto range = [&](Tap tap, std::size_t b) -> const ChannelRange& {
        return ranges[static_cast<std::size_t>(tap_index(tap, b))];
    };
    auto mean = [&](Tap tap, std::size_t b) { return range(tap, b).mean(); };

    qm.input = sc(Tap::input, 0, Mode::affine);
    const ActScale& s_stem = sc(Tap::stem, 0, Mode::affine);
    qm.stem = quant_linear(m.stem, qm.input, mean(Tap::input, 0), nullptr, &s_stem, qmax);

    // depthwise conv with the stem dequantization folded in
    const std::size_t d = m.config.d0;
    std::vector<double> k_eff(d * 9);
    for (std::size_t i = 0; i < k_eff.size(); ++i) k_eff[i] = m.dw_kernel[i] * s_stem.scale[i / 9];
    const auto mu_stem = mean(Tap::stem, 0);
    for (std::size_t c = 0; c < d; ++c) {
        qm.dw_scale.push_back(tensor_scale(std::span<const double>(k_eff).subspan(c * 9, 9), qmax));
        for (std::size_t k = 0; k < 9; ++k) qm.dw_kernel.push_back(quant_weight(k_eff[c * 9 + k], qm.dw_scale[c], qmax));
    }
    for (std::size_t c = 0; c < d; ++c) {
        // every tap reads a real sample, so the input offsets fold into the bias
        double b = m.dw_bias[c];
        for (std::size_t k = 0; k < 9; ++k) {
            const double dk = k_eff[c * 9 + k] - qm.dw_scale[c] * qm.dw_kernel[c * 9 + k];
            b += m.dw_kernel[c * 9 + k] * s_stem.offset[c] + dk * (mu_stem[c] - s_stem.offset[c]) / s_stem.scale[c];
        }
        qm.dw_bias.push_back(quant_bias(b, qm.dw_scale[c]));
    }
    const ActScale& s_act0 = sc(Tap::act0, 0, Mode::affine);
    const double stem_unit = min_scale(s_act0) / 256.0;
    qm.stem_silu = silu_lut(range(Tap::conv, 0), bits, stem_unit);
    for (double s : qm.dw_scale) qm.stem_pos.push_back(LutInput::make(qm.stem_silu, s));
    qm.stem_out = make_out_map(stem_unit, s_act0);
    qm.exp_lut = exp_table(bits);

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    ActScale s_a = s_act0;
    std::vector<double> mu_a = mean(Tap::act0, 0);
    for (std::size_t b = 0; b < nb; ++b) {
        const auto& fb = m.blocks[b];
        QBlock qb;
        auto attn = [&](const AttentionWeights& fw, const Affine& pre, const ActScale& in, const std::vector<double>& mu,
                        Tap q, Tap k, Tap v, Tap o) {
            QAttention a;
            const ActScale& sq = sc(q, b, Mode::tensor);
            const ActScale& sk = sc(k, b, Mode::tensor);
            const ActScale& sv = sc(v, b, Mode::affine);
            const ActScale& so = sc(o, b, Mode::affine);
            a.q = quant_linear(fw.q, in, mu, &pre, &sq, qmax);
            a.k = quant_linear(fw.k, in, mu, &pre, &sk, qmax);
            a.v = quant_linear(fw.v, in, mu, &pre, &sv, qmax);
            a.o = quant_linear(fw.o, sv, mean(v, b), nullptr, &so, qmax);
            a.score_pos = LutInput::make(qm.exp_lut, sq.scale[0] * sk.scale[0] * inv_sqrt_d);
            return a;
        };
        qb.temporal = attn(fb.temporal, fb.norm_t, s_a, mu_a, Tap::q_t, Tap::k_t, Tap::v_t, Tap::out_t);
        const ActScale& s_rt = sc(Tap::res_t, b, Mode::affine);
        qb.res_t = make_residual(s_a, qm.tap_scales[static_cast<std::size_t>(tap_index(Tap::out_t, b))], s_rt);
        s_a = s_rt;

        mu_a = mean(Tap::res_t, b);
        qb.spectral = attn(fb.spectral, fb.norm_s, s_a, mu_a, Tap::q_s, Tap::k_s, Tap::v_s, Tap::out_s);
        const ActScale& s_rs = sc(Tap::res_s, b, Mode::affine);
        qb.res_s = make_residual(s_a, qm.tap_scales[static_cast<std::size_t>(tap_index(Tap::out_s, b))], s_rs);
        s_a = s_rs;

        const ActScale& s_ga = sc(Tap::gate_act, b, Mode::symmetric);
        mu_a = mean(Tap::res_s, b);
        qb.gate = quant_linear(fb.ffn_gate, s_a, mu_a, &fb.norm_f, nullptr, qmax, 1.0, true);
        const double gate_unit = min_scale(s_ga) / 256.0;
        qb.gate_silu = silu_lut(range(Tap::gate, b), bits, gate_unit);
        for (double s : qb.gate.w_scale) qb.gate_pos.push_back(LutInput::make(qb.gate_silu, s));
        qb.gate_out = make_out_map(gate_unit, s_ga);
        const ActScale& s_up = sc(Tap::up, b, Mode::symmetric);
        qb.up = quant_linear(fb.ffn_up, s_a, mu_a, &fb.norm_f, &s_up, qmax);
        const ActScale& s_h = sc(Tap::hidden, b, Mode::affine);
        for (std::size_t c = 0; c < s_h.channels(); ++c) {
            const double unit = s_ga.scale[c] * s_up.scale[c];
            qb.hidden.rq.push_back(Requant::from_ratio(unit / s_h.scale[c]));
            qb.hidden.zero.push_back(quant_zero(s_h.offset[c], unit));
        }
        const ActScale& s_dn = sc(Tap::down, b, Mode::affine);
        qb.down = quant_linear(fb.ffn_down, s_h, mean(Tap::hidden, b), nullptr, &s_dn, qmax);
        const ActScale& s_rf = sc(Tap::res_f, b, Mode::affine);
        qb.res_f = make_residual(s_a, s_dn, s_rf);
        s_a = s_rf;
        mu_a = mean(Tap::res_f, b);
        qm.blocks.push_back(std::move(qb));
    }
    const ActScale& s_lat = sc(Tap::latent, nb - 1, Mode::affine);
    qm.latent = quant_linear(m.latent, s_a, mu_a, nullptr, &s_lat, qmax, static_cast<double>(n));
    const auto mu_lat = mean(Tap::latent, nb - 1);
    qm.head = quant_linear(m.head, s_lat, mu_lat, nullptr, nullptr, qmax);
    qm.abstain = quant_linear(m.abstain, s_lat, mu_lat, nullptr, nullptr, qmax);

    // table errors over the calibration inputs, and float logits
    std::vector<ErrorAcc> errs(1 + nb);
    errs[0].lut = &qm.stem_silu;
    for (std::size_t b = 0; b < nb; ++b) errs[1 + b].lut = &qm.blocks[b].gate_silu;
    const int conv_tap = tap_index(Tap::conv);
    const Observer err_obs = [&](int idx, std::span<const double> v) {
        if (idx == conv_tap) {
            errs[0].add(v);
            return;
        }
        for (std::size_t b = 0; b < nb; ++b) {
            if (idx == tap_index(Tap::gate, b)) errs[1 + b].add(v);
        }
    };
    std::vector<std::vector<double>> float_logits;
    for (const auto& w : calib) float_logits.push_back(forward(m, w, err_obs).logits);

    auto& rep = qm.report;
    rep.luts.push_back({"stem_silu", errs[0].max_error, errs[0].f_hi - errs[0].f_lo});
    for (std::size_t b = 0; b < nb; ++b) {
        rep.luts.push_back({"block" + std::to_string(b) + "_gate_silu", errs[1 + b].max_error,
                            errs[1 + b].f_hi - errs[1 + b].f_lo});
    }
    {
        // softmax inputs are max-subtracted, so the domain is (-inf, 0]
        std::vector<double> xs;
        for (int i = 0; i <= 4096; ++i) xs.push_back(-16.0 + 16.0 * i / 4096.0);
        rep.luts.push_back({"softmax_exp", lut_max_error(qm.exp_lut, [](double x) { return std::exp(x); }, xs), 1.0});
    }
    for (const auto& l : rep.luts) {
        if (l.relative() > 0.01) {
            throw QuantizationError("lookup table " + l.name + " exceeds 1% error on calibration inputs");
        }
    }

    std::size_t agree = 0;
    for (std::size_t i = 0; i < calib.size(); ++i) {
        const auto q = forward_quantized(qm, calib[i]);
        rep.calibration_saturations += q.saturations;
        agree += q.top == argmax(float_logits[i]);
        for (std::size_t k = 0; k < q.logits.size(); ++k) {
            const double deq = static_cast<double>(q.logits[k]) * qm.logit_scale();
            rep.logit_error_bound = std::max(rep.logit_error_bound, std::abs(deq - float_logits[i][k]));
        }
    }
    rep.argmax_agreement = static_cast<double>(agree) / static_cast<double>(calib.size());
    return qm;
}

}  // namespace zks::encoder
