#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "zks/encoder/tensor_ops.hpp"

namespace zks::encoder {

struct MsmLoss {
    double value = 0.0;
    std::vector<double> grad;  // d value / d x_hat
};

/// Mean L1 over the masked indices. The subgradient at x_hat == x is 0.
MsmLoss loss_msm(std::span<const double> x, std::span<const double> x_hat, std::span<const std::size_t> mask);

struct PhaseLoss {
    double value = 0.0;
    std::vector<double> grad_a;
    std::vector<double> grad_b;
    std::size_t masked = 0;  // increments dropped for zero-magnitude entries
};

/// Latents are frames x channels complex pairs, laid out (t * channels + s) * 2.
/// Per channel, the variance over time of the difference between the two
/// sequences' wrapped phase increments, averaged over channels.
PhaseLoss loss_phase(std::span<const double> z_a, std::span<const double> z_b, std::size_t frames, std::size_t channels);

struct NceLoss {
    double value = 0.0;
    std::vector<double> grad_p;
    std::vector<double> grad_t;
    std::vector<std::vector<double>> grad_neg;
};

/// -log softmax of cos(p, t) / tau among {t} and the negatives.
NceLoss loss_nce(std::span<const double> p, std::span<const double> t, const std::vector<std::vector<double>>& negatives,
                 double tau);

struct PretrainParts {
    double msm = 0.0;
    double phase = 0.0;
    double nce = 0.0;
};

double loss_pretrain(const PretrainParts& parts, double lambda1, double lambda2, double lambda3);

struct CalibratedCe {
    double value = 0.0;
    double grad_t = 0.0;
};

/// Mean negative log-softmax of the true class at logits / T, with dV/dT.
CalibratedCe loss_calibrated_ce(const Matrix& logits, std::span<const int> labels, double temperature);

}  // namespace zks::encoder
