#include "zks/signal/dataset.hpp"

#include <cmath>
#include <numbers>

#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"

namespace zks::signal {
namespace {

struct Path {
    double amplitude;
    double delay;  // cycles of phase across the band
    double phase;
};

constexpr double kDelaySpread = 4.0;

}  // namespace

void DatasetSpec::validate() const {
    if (n_windows == 0 || subcarriers == 0 || n_paths == 0) {
        throw ParameterError("dataset spec needs positive window count, subcarriers and paths");
    }
    if (!Window::valid_frames(frames)) throw ParameterError("dataset frames must be 64, 96 or 128");
    if (n_classes < 2) throw ParameterError("dataset needs at least two classes");
    if (n_classes > kClassDopplerBins.size()) throw ParameterError("too many classes for the Doppler table");
    if (kClassDopplerBins[n_classes - 1] >= static_cast<int>(frames / 2)) {
        throw ParameterError("class Doppler bins exceed the Nyquist bin for this window length");
    }
    if (std::isnan(snr_db)) throw ParameterError("snr_db must not be NaN");
}

std::vector<Window> generate_dataset(const DatasetSpec& spec) {
    spec.validate();
    const std::size_t T = spec.frames;
    const std::size_t S = spec.subcarriers;
    const std::size_t n_dynamic = std::max<std::size_t>(1, spec.n_paths / 2);
    const std::size_t n_static = spec.n_paths > n_dynamic ? spec.n_paths - n_dynamic : 0;

    Rng env_rng(derive_seed(spec.seed, 0));
    std::vector<Path> statics;
    for (std::size_t p = 0; p < n_static; ++p) {
        statics.push_back({env_rng.uniform(0.3, 1.0), env_rng.uniform(0.0, kDelaySpread), env_rng.uniform(0.0, 2 * std::numbers::pi)});
    }

    // balanced labels, shuffled
    std::vector<int> labels(spec.n_windows);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % spec.n_classes);
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[env_rng.below(i)]);

    std::vector<Window> out;
    out.reserve(spec.n_windows);
    const double two_pi = 2 * std::numbers::pi;
    for (std::size_t i = 0; i < spec.n_windows; ++i) {
        Rng rng(derive_seed(spec.seed, i + 1));
        const int label = labels[i];
        const double doppler = static_cast<double>(kClassDopplerBins[static_cast<std::size_t>(label)]) / static_cast<double>(T);

        std::vector<Path> scene = statics;
        for (auto& p : scene) p.amplitude *= rng.uniform(0.9, 1.1);
        std::vector<Path> dynamic;
        for (std::size_t p = 0; p < n_dynamic; ++p) {
            dynamic.push_back({rng.uniform(0.6, 1.0), rng.uniform(0.0, kDelaySpread), rng.uniform(0.0, two_pi)});
        }

        std::vector<double> data(T * S * 2, 0.0);
        double power = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t s = 0; s < S; ++s) {
                const double f = static_cast<double>(s) / static_cast<double>(S);
                double re = 0.0, im = 0.0;
                for (const auto& p : scene) {
                    const double ph = p.phase - two_pi * f * p.delay;
                    re += p.amplitude * std::cos(ph);
                    im += p.amplitude * std::sin(ph);
                }
                for (const auto& p : dynamic) {
                    const double ph = p.phase - two_pi * f * p.delay + two_pi * doppler * static_cast<double>(t);
                    re += p.amplitude * std::cos(ph);
                    im += p.amplitude * std::sin(ph);
                }
                data[(t * S + s) * 2] = re;
                data[(t * S + s) * 2 + 1] = im;
                power += re * re + im * im;
            }
        }
        if (std::isfinite(spec.snr_db)) {
            power /= static_cast<double>(T * S);
            const double noise_var = power / std::pow(10.0, spec.snr_db / 10.0);
            const double sigma = std::sqrt(noise_var / 2.0);
            for (auto& v : data) v += sigma * rng.normal();
        }
        std::string zone = "zone-";
        zone += static_cast<char>('A' + i % 3);
        out.emplace_back(T, S, std::move(data), i, std::move(zone), label);
    }
    return out;
}

}  // namespace zks::signal
