#pragma once

#include <span>
#include <vector>

#include "zks/encoder/tensor_ops.hpp"

namespace zks::calibrate {

using encoder::Matrix;

/// Mean negative log-likelihood of the labels at logits / T.
double nll(const Matrix& logits, std::span<const int> labels, double temperature);

/// Golden-section search for the NLL-minimizing T over log T in [-3, 3].
/// Needs at least two distinct labels.
double fit_temperature(const Matrix& logits, std::span<const int> labels);

/// Max softmax probability of logits / T.
double max_softmax(std::span<const double> logits, double temperature);

/// T * logsumexp(logits / T), the negated free energy; higher means more
/// in-distribution.
double energy_score(std::span<const double> logits, double temperature);

enum class ConfidenceKind { max_softmax, energy };

/// Per-row confidences in [0, 1]. The energy variant squashes the energy
/// score through a logistic.
std::vector<double> confidences(const Matrix& logits, double temperature, ConfidenceKind kind = ConfidenceKind::max_softmax);

}  // namespace zks::calibrate
