#include "zks/encoder/float_model.hpp"

#include <cmath>
#include <numbers>

#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"

namespace zks::encoder {
namespace {

// output projections of residual branches start small
constexpr double kBranchGain = 0.25;

void fill_normal(Rng& rng, std::vector<double>& v, double sd) {
    for (auto& x : v) x = rng.normal() * sd;
}

Linear random_linear(Rng& rng, std::size_t in, std::size_t out, double gain = 1.0) {
    Linear l(in, out);
    fill_normal(rng, l.w.data, gain / std::sqrt(static_cast<double>(in)));
    fill_normal(rng, l.b, 0.1 * gain);
    return l;
}

Affine unit_affine(std::size_t c) { return {std::vector<double>(c, 1.0), std::vector<double>(c, 0.0)}; }

AttentionWeights random_attention(Rng& rng, std::size_t d) {
    return {random_linear(rng, d, d), random_linear(rng, d, d), random_linear(rng, d, d), random_linear(rng, d, d, kBranchGain)};
}

void check_linear(const Linear& l, std::size_t in, std::size_t out) {
    if (l.in() != in || l.out() != out || l.b.size() != out || l.w.data.size() != in * out) {
        throw ParameterError("layer shape does not match the model config");
    }
    for (double v : l.w.data) {
        if (!std::isfinite(v)) throw ParameterError("model weights must be finite");
    }
    for (double v : l.b) {
        if (!std::isfinite(v)) throw ParameterError("model weights must be finite");
    }
}

void check_affine(const Affine& a, std::size_t c) {
    if (a.gamma.size() != c || a.beta.size() != c) throw ParameterError("affine shape does not match the model config");
}

void add_inplace(std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
}

}  // namespace

void ModelConfig::validate() const {
    if (d0 < 8 || d0 > 64) throw ParameterError("d0 must be in 8..64");
    if (n_blocks < 1 || n_blocks > 4) throw ParameterError("block count must be in 1..4");
    if (d_lat == 0 || w_t == 0 || group == 0) throw ParameterError("latent width, w_t and group size must be positive");
    if (n_classes < 2) throw ParameterError("at least two classes are needed");
    if (frames == 0 || subcarriers == 0) throw ParameterError("window shape must be positive");
}

FloatModel FloatModel::random(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(derive_seed(seed, 0x656e63));
    const std::size_t d = config.d0;
    FloatModel m;
    m.config = config;
    m.stem = random_linear(rng, 2, d);
    // temporal notch bank [1, -2 cos w_c, 1] averaged over neighbouring
    // subcarriers, notches spread over (0, pi), plus small noise
    m.dw_kernel.resize(d * 9);
    for (std::size_t c = 0; c < d; ++c) {
        const double w_c = std::numbers::pi * (static_cast<double>(c) + 0.5) / static_cast<double>(d);
        const double taps[3] = {1.0, -2.0 * std::cos(w_c), 1.0};
        const double gain = 1.0 / (3.0 * (2.0 + 2.0 * std::abs(std::cos(w_c))));
        for (std::size_t dt = 0; dt < 3; ++dt) {
            for (std::size_t ds = 0; ds < 3; ++ds) m.dw_kernel[c * 9 + dt * 3 + ds] = taps[dt] * gain * 3.0 + 0.05 * rng.normal();
        }
    }
    m.dw_bias.resize(d);
    fill_normal(rng, m.dw_bias, 0.1);
    for (std::size_t b = 0; b < config.n_blocks; ++b) {
        Block blk;
        blk.norm_t = unit_affine(d);
        blk.temporal = random_attention(rng, d);
        blk.norm_s = unit_affine(d);
        blk.spectral = random_attention(rng, d);
        blk.norm_f = unit_affine(d);
        blk.ffn_gate = random_linear(rng, d, config.d_ff());
        blk.ffn_up = random_linear(rng, d, config.d_ff());
        blk.ffn_down = random_linear(rng, config.d_ff(), d, kBranchGain);
        m.blocks.push_back(std::move(blk));
    }
    m.latent = random_linear(rng, d, config.d_lat);
    m.head = random_linear(rng, config.d_lat, config.n_classes, 0.1);
    m.abstain = random_linear(rng, config.d_lat, 1, 0.1);
    return m;
}

void FloatModel::validate() const {
    config.validate();
    const std::size_t d = config.d0;
    check_linear(stem, 2, d);
    if (dw_kernel.size() != d * 9 || dw_bias.size() != d) throw ParameterError("depthwise kernel shape mismatch");
    if (blocks.size() != config.n_blocks) throw ParameterError("block count mismatch");
    for (const auto& b : blocks) {
        check_affine(b.norm_t, d);
        check_affine(b.norm_s, d);
        check_affine(b.norm_f, d);
        for (const auto* a : {&b.temporal, &b.spectral}) {
            check_linear(a->q, d, d);
            check_linear(a->k, d, d);
            check_linear(a->v, d, d);
            check_linear(a->o, d, d);
        }
        check_linear(b.ffn_gate, d, config.d_ff());
        check_linear(b.ffn_up, d, config.d_ff());
        check_linear(b.ffn_down, config.d_ff(), d);
    }
    check_linear(latent, d, config.d_lat);
    check_linear(head, config.d_lat, config.n_classes);
    check_linear(abstain, config.d_lat, 1);
}

int tap_index(Tap tap, std::size_t block) {
    const int t = static_cast<int>(tap);
    if (t < kGlobalTaps) return t;
    // tail taps pass the last block index
    return t + static_cast<int>(block) * kBlockTaps;
}

std::size_t tap_count(std::size_t n_blocks) { return kGlobalTaps + n_blocks * kBlockTaps + 2; }

ForwardResult forward(const FloatModel& m, const signal::Window& w, const Observer& observe) {
    const auto& cfg = m.config;
    if (w.frames() != cfg.frames || w.subcarriers() != cfg.subcarriers) {
        throw ParameterError("window shape does not match the model config");
    }
    const std::size_t T = cfg.frames, S = cfg.subcarriers, d = cfg.d0, n = cfg.tokens();
    auto emit = [&](Tap tap, std::size_t b, std::span<const double> v) {
        if (observe) observe(tap_index(tap, b), v);
    };
    emit(Tap::input, 0, w.data());

    auto h = apply_linear(w.data(), n, m.stem);
    emit(Tap::stem, 0, h);

    std::vector<double> conv(n * d);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t c = 0; c < d; ++c) {
                double acc = m.dw_bias[c];
                for (int dt = -1; dt <= 1; ++dt) {
                    const std::size_t tt = clamp_index(t, dt, T);
                    for (int ds = -1; ds <= 1; ++ds) {
                        const std::size_t ss = clamp_index(s, ds, S);
                        acc += m.dw_kernel[c * 9 + static_cast<std::size_t>((dt + 1) * 3 + ds + 1)] * h[(tt * S + ss) * d + c];
                    }
                }
                conv[(t * S + s) * d + c] = acc;
            }
        }
    }
    emit(Tap::conv, 0, conv);
    std::vector<double> x(n * d);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = silu(conv[i]);
    emit(Tap::act0, 0, x);

    const auto tgroups = temporal_groups(T, S, cfg.w_t);
    const auto sgroups = subcarrier_groups(T, S, cfg.group);
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const auto& blk = m.blocks[b];

        auto nt = apply_affine(x, blk.norm_t);
        emit(Tap::norm_t, b, nt);
        auto at = group_attention(nt, d, tgroups, blk.temporal);
        emit(Tap::q_t, b, at.q);
        emit(Tap::k_t, b, at.k);
        emit(Tap::v_t, b, at.v);
        emit(Tap::out_t, b, at.out);
        add_inplace(x, at.out);
        emit(Tap::res_t, b, x);

        auto ns = apply_affine(x, blk.norm_s);
        emit(Tap::norm_s, b, ns);
        auto as = group_attention(ns, d, sgroups, blk.spectral);
        emit(Tap::q_s, b, as.q);
        emit(Tap::k_s, b, as.k);
        emit(Tap::v_s, b, as.v);
        emit(Tap::out_s, b, as.out);
        add_inplace(x, as.out);
        emit(Tap::res_s, b, x);

        auto nf = apply_affine(x, blk.norm_f);
        emit(Tap::norm_f, b, nf);
        auto gate = apply_linear(nf, n, blk.ffn_gate);
        emit(Tap::gate, b, gate);
        for (auto& v : gate) v = silu(v);
        emit(Tap::gate_act, b, gate);
        auto up = apply_linear(nf, n, blk.ffn_up);
        emit(Tap::up, b, up);
        for (std::size_t i = 0; i < up.size(); ++i) up[i] *= gate[i];
        emit(Tap::hidden, b, up);
        auto down = apply_linear(up, n, blk.ffn_down);
        emit(Tap::down, b, down);
        add_inplace(x, down);
        emit(Tap::res_f, b, x);
    }

    std::vector<double> pooled(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) pooled[c] += x[i * d + c];
    }
    for (auto& v : pooled) v /= static_cast<double>(n);
    const std::size_t last = m.blocks.size() - 1;
    emit(Tap::pooled, last, pooled);
    auto r = forward_head(m, pooled);
    emit(Tap::latent, last, r.latent);
    return r;
}

ForwardResult forward_head(const FloatModel& m, std::span<const double> pooled) {
    ForwardResult r;
    r.pooled.assign(pooled.begin(), pooled.end());
    r.latent = apply_linear(pooled, 1, m.latent);
    r.logits = apply_linear(r.latent, 1, m.head);
    r.u_raw = apply_linear(r.latent, 1, m.abstain)[0];
    return r;
}

void fit_affine(FloatModel& m, std::span<const signal::Window> windows) {
    if (windows.empty()) throw ParameterError("affine fitting needs at least one window");
    const std::size_t d = m.config.d0;
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        for (Tap tap : {Tap::norm_t, Tap::norm_s, Tap::norm_f}) {
            Affine& a = tap == Tap::norm_t ? m.blocks[b].norm_t
                        : tap == Tap::norm_s ? m.blocks[b].norm_s
                                             : m.blocks[b].norm_f;
            a = unit_affine(d);
            const int want = tap_index(tap, b);
            std::vector<double> sum(d, 0.0), sum2(d, 0.0);
            double count = 0.0;
            const Observer obs = [&](int idx, std::span<const double> v) {
                if (idx != want) return;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    sum[i % d] += v[i];
                    sum2[i % d] += v[i] * v[i];
                }
                count += static_cast<double>(v.size() / d);
            };
            for (const auto& w : windows) forward(m, w, obs);
            for (std::size_t c = 0; c < d; ++c) {
                const double mean = sum[c] / count;
                const double var = std::max(0.0, sum2[c] / count - mean * mean);
                const double sd = std::sqrt(var);
                if (!(sd > 1e-12)) throw DegenerateStatsError("affine fitting saw a constant channel");
                a.gamma[c] = 1.0 / sd;
                a.beta[c] = -mean / sd;
            }
        }
    }
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace zks::encoder
