#pragma once

#include <cstdint>
#include <string>

#include "zks/zkp/field.hpp"

namespace zks::calibrate {

/// Operating point registered alongside a model. Immutable: the with_*
/// methods return a new profile with a new digest.
class CalibrationProfile {
public:
    static constexpr std::size_t kDefaultBins = 15;
    static constexpr double kDefaultLambda = 0.5;
    /// Confidences are compared in 1/kConfidenceScale units in the circuit.
    static constexpr std::int64_t kConfidenceScale = 128;

    CalibrationProfile(double temperature, double tau_reg, std::string dataset_checksum, zkp::Fp model_hash,
                       double lambda = kDefaultLambda, std::size_t ece_bins = kDefaultBins);

    double temperature() const { return temperature_; }
    double tau_reg() const { return tau_reg_; }
    double lambda() const { return lambda_; }
    std::size_t ece_bins() const { return ece_bins_; }
    const std::string& dataset_checksum() const { return dataset_checksum_; }
    zkp::Fp model_hash() const { return model_hash_; }

    /// Smallest integer confidence accepted: u_q >= tau_q exactly when
    /// u_q / 128 >= tau_reg.
    std::int64_t tau_q() const;

    CalibrationProfile with_temperature(double t) const;
    CalibrationProfile with_tau(double tau) const;

    /// Canonical JSON: sorted keys, no whitespace.
    std::string to_json() const;
    static CalibrationProfile from_json(const std::string& text);
    zkp::Fp digest() const { return digest_; }

private:
    double temperature_;
    double tau_reg_;
    double lambda_;
    std::size_t ece_bins_;
    std::string dataset_checksum_;
    zkp::Fp model_hash_;
    zkp::Fp digest_;
};

}  // namespace zks::calibrate
