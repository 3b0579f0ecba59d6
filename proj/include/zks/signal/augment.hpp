#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "zks/signal/window.hpp"

namespace zks::signal {

struct AugmentSpec {
    double mask_ratio = 0.0;
    double phase_ramp_rad_per_frame = 0.0;
    int reverb_kernel_len = 0;
    double power_jitter_db = 0.0;

    /// Mid-range defaults used for pretraining.
    static AugmentSpec pretraining_default() { return {0.15, 0.01, 7, 1.5}; }
    bool within_supported_ranges() const;
    void validate() const;
};

/// floor(mask_ratio * S), tolerant of representation error in the product.
std::size_t masked_count(double mask_ratio, std::size_t subcarriers);
/// Seeded choice of masked subcarriers, sorted.
std::vector<std::size_t> masked_subcarriers(double mask_ratio, std::size_t subcarriers, std::uint64_t seed);
/// Exponentially decaying taps, first tap 1. Length 0 gives {1}.
std::vector<double> reverb_kernel(int length, std::uint64_t seed);

/// Spectral dropout, then FIR reverberation along time, then the phase ramp
/// e^{i r t}, then the global power gain.
Window augment(const Window& w, const AugmentSpec& a, std::uint64_t seed);

enum class PerturbKind { actuation, jitter_drop, drift, replay_mosaic, jamming };

/// Throws ParameterError on unknown names.
PerturbKind parse_perturb_kind(std::string_view name);
std::string_view perturb_kind_name(PerturbKind kind);

/// Frames dropped (then re-interpolated) by jitter_drop, sorted. At
/// intensity 1 the drop fraction is drawn from [0.10, 0.30].
std::vector<std::size_t> jitter_drop_frames(std::size_t frames, double intensity, std::uint64_t seed);
/// Mixing weight of the replayed segment.
double replay_alpha(double intensity);
/// The stale segment that replay_mosaic mixes in: a seeded circular time
/// shift of the window.
Window replay_source(const Window& w, std::uint64_t seed);

/// Threat-model transforms. Intensity 0 is the identity for every kind.
/// replay_mosaic uses `past` when given, otherwise replay_source(w, seed).
Window perturb(const Window& w, PerturbKind kind, double intensity, std::uint64_t seed,
               const std::optional<Window>& past = std::nullopt);

}  // namespace zks::signal
