#include "zks/calibrate/profile.hpp"

#include <cmath>

#include "json.hpp"
#include "zks/common/errors.hpp"
#include "zks/zkp/sponge.hpp"

namespace zks::calibrate {

CalibrationProfile::CalibrationProfile(double temperature, double tau_reg, std::string dataset_checksum,
                                       zkp::Fp model_hash, double lambda, std::size_t ece_bins)
    : temperature_(temperature),
      tau_reg_(tau_reg),
      lambda_(lambda),
      ece_bins_(ece_bins),
      dataset_checksum_(std::move(dataset_checksum)),
      model_hash_(model_hash) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ParameterError("temperature must be positive");
    if (!(tau_reg >= 0.0 && tau_reg <= 1.0)) throw ParameterError("threshold must lie in [0, 1]");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("utility weight must be non-negative");
    if (ece_bins == 0) throw ParameterError("need at least one bin");
    const std::string text = to_json();
    digest_ = zkp::hash_bytes(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
                              zkp::Domain::digest);
}

std::int64_t CalibrationProfile::tau_q() const {
    // guard against 0.3 * 128 landing a hair above an integer
    return static_cast<std::int64_t>(std::ceil(tau_reg_ * static_cast<double>(kConfidenceScale) - 1e-9));
}

CalibrationProfile CalibrationProfile::with_temperature(double t) const {
    return CalibrationProfile(t, tau_reg_, dataset_checksum_, model_hash_, lambda_, ece_bins_);
}

CalibrationProfile CalibrationProfile::with_tau(double tau) const {
    return CalibrationProfile(temperature_, tau, dataset_checksum_, model_hash_, lambda_, ece_bins_);
}

std::string CalibrationProfile::to_json() const {
    nlohmann::json j;
    j["temperature"] = temperature_;
    j["tau_reg"] = tau_reg_;
    j["lambda"] = lambda_;
    j["ece_bins"] = ece_bins_;
    j["dataset_checksum"] = dataset_checksum_;
    j["model_hash"] = model_hash_.value();
    return j.dump();
}

CalibrationProfile CalibrationProfile::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        const auto h = j.at("model_hash").get<std::uint64_t>();
        if (h >= zkp::Fp::kModulus) throw FormatError("model hash is not a field element");
        return CalibrationProfile(j.at("temperature").get<double>(), j.at("tau_reg").get<double>(),
                                  j.at("dataset_checksum").get<std::string>(),
                                  zkp::Fp(h), j.at("lambda").get<double>(),
                                  j.at("ece_bins").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad calibration profile: ") + e.what());
    }
}

}  // namespace zks::calibrate
