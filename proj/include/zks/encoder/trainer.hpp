#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zks/encoder/float_model.hpp"
#include "zks/signal/window.hpp"

namespace zks::encoder {

struct TrainConfig {
    std::size_t steps = 200;
    std::size_t batch = 32;
    double learning_rate = 0.1;
    double momentum = 0.9;
    std::uint64_t seed = 1;
};

struct TrainReport {
    double final_loss = 0.0;
    double train_accuracy = 0.0;
};

/// Reference trainer for test fixtures. The encoder body stays frozen; the
/// latent map and class head minimize cross-entropy on pooled features with
/// SGD and momentum, and the abstain head fits correctness with a logistic
/// loss on the detached latent.
TrainReport train_head(FloatModel& m, std::span<const signal::Window> windows, const TrainConfig& cfg = {});

/// Pooled encoder features, one row per window.
std::vector<std::vector<double>> pooled_features(const FloatModel& m, std::span<const signal::Window> windows);

}  // namespace zks::encoder
