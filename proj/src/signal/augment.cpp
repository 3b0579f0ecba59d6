#include "zks/signal/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"

namespace zks::signal {

bool AugmentSpec::within_supported_ranges() const {
    return mask_ratio >= 0.10 && mask_ratio <= 0.20 && std::abs(phase_ramp_rad_per_frame) <= 0.02 &&
           reverb_kernel_len >= 5 && reverb_kernel_len <= 9 && std::abs(power_jitter_db) <= 3.0;
}

void AugmentSpec::validate() const {
    if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) throw ParameterError("mask_ratio must be in [0, 1]");
    if (reverb_kernel_len < 0 || reverb_kernel_len > 9) throw ParameterError("reverb kernel length must be in [0, 9]");
    if (!std::isfinite(phase_ramp_rad_per_frame) || !std::isfinite(power_jitter_db)) {
        throw ParameterError("augmentation parameters must be finite");
    }
}

std::size_t masked_count(double mask_ratio, std::size_t subcarriers) {
    return static_cast<std::size_t>(std::floor(mask_ratio * static_cast<double>(subcarriers) + 1e-9));
}

std::vector<std::size_t> masked_subcarriers(double mask_ratio, std::size_t subcarriers, std::uint64_t seed) {
    std::vector<std::size_t> order(subcarriers);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 101));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    order.resize(std::min(masked_count(mask_ratio, subcarriers), subcarriers));
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<double> reverb_kernel(int length, std::uint64_t seed) {
    std::vector<double> taps{1.0};
    Rng rng(derive_seed(seed, 102));
    constexpr double kDecay = 0.6;
    for (int l = 1; l < length; ++l) taps.push_back(std::pow(kDecay, l) * 0.5 * rng.normal());
    return taps;
}

Window augment(const Window& w, const AugmentSpec& a, std::uint64_t seed) {
    a.validate();
    const std::size_t T = w.frames(), S = w.subcarriers();
    std::vector<double> x(w.data().begin(), w.data().end());

    for (std::size_t s : masked_subcarriers(a.mask_ratio, S, seed)) {
        for (std::size_t t = 0; t < T; ++t) {
            x[w.index(t, s, 0)] = 0.0;
            x[w.index(t, s, 1)] = 0.0;
        }
    }

    if (a.reverb_kernel_len > 1) {
        const auto taps = reverb_kernel(a.reverb_kernel_len, seed);
        std::vector<double> y(x.size(), 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t l = 0; l < taps.size() && l <= t; ++l) {
                for (std::size_t k = 0; k < S * 2; ++k) y[t * S * 2 + k] += taps[l] * x[(t - l) * S * 2 + k];
            }
        }
        x = std::move(y);
    }

    if (a.phase_ramp_rad_per_frame != 0.0) {
        for (std::size_t t = 0; t < T; ++t) {
            const double phi = a.phase_ramp_rad_per_frame * static_cast<double>(t);
            const double c = std::cos(phi), sn = std::sin(phi);
            for (std::size_t s = 0; s < S; ++s) {
                const double re = x[w.index(t, s, 0)], im = x[w.index(t, s, 1)];
                x[w.index(t, s, 0)] = re * c - im * sn;
                x[w.index(t, s, 1)] = re * sn + im * c;
            }
        }
    }

    if (a.power_jitter_db != 0.0) {
        const double gain = std::pow(10.0, a.power_jitter_db / 20.0);
        for (auto& v : x) v *= gain;
    }
    return w.with_data(std::move(x));
}

PerturbKind parse_perturb_kind(std::string_view name) {
    if (name == "actuation") return PerturbKind::actuation;
    if (name == "jitter_drop") return PerturbKind::jitter_drop;
    if (name == "drift") return PerturbKind::drift;
    if (name == "replay_mosaic") return PerturbKind::replay_mosaic;
    if (name == "jamming") return PerturbKind::jamming;
    throw ParameterError("unknown perturbation kind: " + std::string(name));
}

std::string_view perturb_kind_name(PerturbKind kind) {
    switch (kind) {
        case PerturbKind::actuation: return "actuation";
        case PerturbKind::jitter_drop: return "jitter_drop";
        case PerturbKind::drift: return "drift";
        case PerturbKind::replay_mosaic: return "replay_mosaic";
        case PerturbKind::jamming: return "jamming";
    }
    return "?";
}

std::vector<std::size_t> jitter_drop_frames(std::size_t frames, double intensity, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 201));
    const double fraction = std::clamp(intensity * rng.uniform(0.10, 0.30), 0.0, 0.9);
    const auto n_drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(frames)));
    std::vector<std::size_t> order(frames);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    order.resize(n_drop);
    std::sort(order.begin(), order.end());
    return order;
}

double replay_alpha(double intensity) {
    return std::min(0.5, 0.25 * intensity);
}

Window replay_source(const Window& w, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 202));
    const std::size_t T = w.frames(), row = w.subcarriers() * 2;
    const std::size_t shift = T / 4 + rng.below(T / 2);
    std::vector<double> x(w.size());
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t src = (t + shift) % T;
        std::copy_n(w.data().begin() + static_cast<std::ptrdiff_t>(src * row), row, x.begin() + static_cast<std::ptrdiff_t>(t * row));
    }
    return w.with_data(std::move(x));
}

namespace {

void rotate(std::vector<double>& x, const Window& w, std::size_t t, std::size_t s, double phi) {
    const double c = std::cos(phi), sn = std::sin(phi);
    const double re = x[w.index(t, s, 0)], im = x[w.index(t, s, 1)];
    x[w.index(t, s, 0)] = re * c - im * sn;
    x[w.index(t, s, 1)] = re * sn + im * c;
}

}  // namespace

Window perturb(const Window& w, PerturbKind kind, double intensity, std::uint64_t seed,
               const std::optional<Window>& past) {
    if (!(intensity >= 0.0) || !std::isfinite(intensity)) throw ParameterError("perturbation intensity must be >= 0");
    if (intensity == 0.0) return w;
    const std::size_t T = w.frames(), S = w.subcarriers();
    std::vector<double> x(w.data().begin(), w.data().end());
    Rng rng(derive_seed(seed, 300 + static_cast<std::uint64_t>(kind)));

    switch (kind) {
        case PerturbKind::actuation: {
            // slow structured interference, below one cycle per window
            const double freq = rng.uniform(0.25, 1.0) / static_cast<double>(T);
            const double phase0 = rng.uniform(0.0, 6.283185307179586);
            const double amp = 0.5 * intensity;
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t s = 0; s < S; ++s) {
                    const double ph = phase0 + 6.283185307179586 * (freq * static_cast<double>(t) +
                                                                    static_cast<double>(s) / static_cast<double>(S));
                    x[w.index(t, s, 0)] += amp * std::cos(ph);
                    x[w.index(t, s, 1)] += amp * std::sin(ph);
                }
            }
            break;
        }
        case PerturbKind::jitter_drop: {
            const auto dropped = jitter_drop_frames(T, intensity, seed);
            std::vector<bool> is_dropped(T, false);
            for (auto t : dropped) is_dropped[t] = true;
            const std::size_t row = S * 2;
            for (std::size_t t : dropped) {
                std::ptrdiff_t prev = static_cast<std::ptrdiff_t>(t) - 1;
                while (prev >= 0 && is_dropped[static_cast<std::size_t>(prev)]) --prev;
                std::size_t next = t + 1;
                while (next < T && is_dropped[next]) ++next;
                for (std::size_t k = 0; k < row; ++k) {
                    double v;
                    if (prev >= 0 && next < T) {
                        const double frac = static_cast<double>(static_cast<std::ptrdiff_t>(t) - prev) /
                                            static_cast<double>(static_cast<std::ptrdiff_t>(next) - prev);
                        v = (1 - frac) * w.data()[static_cast<std::size_t>(prev) * row + k] + frac * w.data()[next * row + k];
                    } else if (prev >= 0) {
                        v = w.data()[static_cast<std::size_t>(prev) * row + k];
                    } else if (next < T) {
                        v = w.data()[next * row + k];
                    } else {
                        v = 0.0;
                    }
                    x[t * row + k] = v;
                }
            }
            break;
        }
        case PerturbKind::drift: {
            const double slope = 0.05 * intensity;
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t s = 0; s < S; ++s) rotate(x, w, t, s, slope * static_cast<double>(t));
            }
            break;
        }
        case PerturbKind::replay_mosaic: {
            const Window old = past ? *past : replay_source(w, seed);
            if (old.frames() != T || old.subcarriers() != S) throw ParameterError("replay source shape mismatch");
            const double alpha = replay_alpha(intensity);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1 - alpha) * w.data()[i] + alpha * old.data()[i];
            break;
        }
        case PerturbKind::jamming: {
            const std::size_t band = std::max<std::size_t>(1, S / 8);
            const std::size_t start = rng.below(S - band + 1);
            const double sigma = 3.0 * intensity;
            for (std::size_t t = 0; t < T; ++t) {
                if (rng.uniform() >= 0.2) continue;
                for (std::size_t s = start; s < start + band; ++s) {
                    x[w.index(t, s, 0)] += sigma * rng.normal();
                    x[w.index(t, s, 1)] += sigma * rng.normal();
                }
            }
            break;
        }
    }
    return w.with_data(std::move(x));
}

}  // namespace zks::signal
