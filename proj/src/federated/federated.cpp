#include "zks/federated/federated.hpp"

#include <cmath>

#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"

namespace zks::federated {

std::vector<double> clip_update(std::span<const double> u, double clip) {
    if (!(clip > 0.0)) throw ParameterError("clip norm must be positive");
    double sq = 0.0;
    for (double x : u) sq += x * x;
    const double norm = std::sqrt(sq);
    std::vector<double> out(u.begin(), u.end());
    if (norm > clip) {
        const double s = clip / norm;
        for (double& x : out) x *= s;
    }
    return out;
}

std::vector<double> privatize(std::span<const double> u, double sigma, double clip, std::uint64_t seed) {
    if (sigma < 0.0 || clip < 0.0) throw ParameterError("noise multiplier and clip must be non-negative");
    std::vector<double> out(u.begin(), u.end());
    if (sigma == 0.0) return out;
    Rng rng(derive_seed(seed, 0x6470));
    const double sd = sigma * clip;
    for (double& x : out) x += sd * rng.normal();
    return out;
}

std::vector<double> site_weights(std::span<const SiteUpdate> updates) {
    if (updates.empty()) throw ParameterError("no site updates");
    std::vector<double> w;
    double total = 0.0;
    for (const auto& s : updates) {
        if (s.val_macro_f1 < 0.0 || s.val_ece < 0.0) throw ParameterError("site metrics must be non-negative");
        w.push_back(s.val_macro_f1 / (s.val_ece + kEceFloor));
        total += w.back();
    }
    if (!(total > 0.0)) throw ParameterError("all site weights are zero");
    for (double& x : w) x /= total;
    return w;
}

std::vector<double> aggregate(std::span<const SiteUpdate> updates) {
    const auto w = site_weights(updates);
    const auto n = updates.front().delta.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t s = 0; s < updates.size(); ++s) {
        if (updates[s].delta.size() != n) throw ParameterError("site updates differ in length");
        for (std::size_t i = 0; i < n; ++i) out[i] += w[s] * updates[s].delta[i];
    }
    return out;
}

}  // namespace zks::federated
