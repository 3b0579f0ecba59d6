#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace zks::federated {

struct SiteUpdate {
    std::string site_id;
    std::vector<double> delta;
    double val_macro_f1 = 0.0;
    double val_ece = 0.0;
};

/// Floor added to ECE before inverting it.
inline constexpr double kEceFloor = 1e-3;

/// u * min(1, C / |u|). Throws ParameterError unless C > 0.
std::vector<double> clip_update(std::span<const double> u, double clip);

/// Adds i.i.d. N(0, (sigma * clip)^2) per coordinate, deterministic in seed.
std::vector<double> privatize(std::span<const double> u, double sigma, double clip, std::uint64_t seed);

/// Normalized weights proportional to F1 / (ECE + floor).
std::vector<double> site_weights(std::span<const SiteUpdate> updates);

/// Weighted sum of deltas. Throws ParameterError on empty input, unequal
/// lengths or a non-positive total weight.
std::vector<double> aggregate(std::span<const SiteUpdate> updates);

}  // namespace zks::federated
