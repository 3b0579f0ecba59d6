#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "zks/encoder/tensor_ops.hpp"
#include "zks/signal/window.hpp"

namespace zks::encoder {

struct ModelConfig {
    std::size_t frames = 128;
    std::size_t subcarriers = 30;
    std::size_t d0 = 16;
    std::size_t n_blocks = 2;
    std::size_t d_lat = 32;
    std::size_t w_t = 16;
    std::size_t group = 8;
    std::size_t n_classes = 5;

    std::size_t d_ff() const { return 2 * d0; }
    std::size_t tokens() const { return frames * subcarriers; }
    void validate() const;
};

struct Block {
    Affine norm_t;
    AttentionWeights temporal;
    Affine norm_s;
    AttentionWeights spectral;
    Affine norm_f;
    Linear ffn_gate;  // silu branch
    Linear ffn_up;
    Linear ffn_down;
};

/// Float reference encoder: 1x1 stem, edge-replicated depthwise 3x3 conv
/// and SiLU over (time, subcarrier), then blocks of local temporal
/// attention, grouped subcarrier attention and a SwiGLU feed-forward, each
/// pre-scaled by an affine map and added residually. Mean pooling feeds the
/// latent map, which feeds the class and abstain heads.
struct FloatModel {
    ModelConfig config;
    Linear stem;                     // 2 -> d0
    std::vector<double> dw_kernel;  // d0 x 3 x 3
    std::vector<double> dw_bias;
    std::vector<Block> blocks;
    Linear latent;   // d0 -> d_lat
    Linear head;     // d_lat -> K
    Linear abstain;  // d_lat -> 1

    static FloatModel random(const ModelConfig& config, std::uint64_t seed);
    void validate() const;
};

/// Named activation points, in forward order.
enum class Tap : int {
    input,
    stem,
    conv,  // pre-SiLU
    act0,
    // per block
    norm_t,
    q_t,
    k_t,
    v_t,
    out_t,
    res_t,
    norm_s,
    q_s,
    k_s,
    v_s,
    out_s,
    res_s,
    norm_f,
    gate,  // pre-SiLU
    gate_act,
    up,
    hidden,
    down,
    res_f,
    // after blocks
    pooled,
    latent,
};

inline constexpr int kGlobalTaps = 4;
inline constexpr int kBlockTaps = 19;

int tap_index(Tap tap, std::size_t block = 0);
std::size_t tap_count(std::size_t n_blocks);

using Observer = std::function<void(int tap_index, std::span<const double> values)>;

struct ForwardResult {
    std::vector<double> logits;
    double u_raw = 0.0;
    std::vector<double> latent;
    std::vector<double> pooled;
};

ForwardResult forward(const FloatModel& m, const signal::Window& w, const Observer& observe = {});

/// Latent, logits and abstain score from a pooled feature vector.
ForwardResult forward_head(const FloatModel& m, std::span<const double> pooled);

/// Sets every block affine to standardize its input channels, in forward
/// order, using statistics over the given windows.
void fit_affine(FloatModel& m, std::span<const signal::Window> windows);

std::size_t argmax(std::span<const double> v);

/// i + delta clamped to [0, n); the depthwise conv pads by replication.
inline std::size_t clamp_index(std::size_t i, int delta, std::size_t n) {
    const long j = static_cast<long>(i) + delta;
    return j < 0 ? 0 : j >= static_cast<long>(n) ? n - 1 : static_cast<std::size_t>(j);
}

}  // namespace zks::encoder
