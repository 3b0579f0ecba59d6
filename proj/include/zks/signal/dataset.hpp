#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "zks/signal/window.hpp"

namespace zks::signal {

struct DatasetSpec {
    std::uint64_t seed = 7;
    std::size_t n_windows = 100;
    std::size_t frames = 128;
    std::size_t subcarriers = 30;
    std::size_t n_classes = 5;
    std::size_t n_paths = 6;
    double snr_db = 20.0;  // +inf disables noise

    void validate() const;
};

/// Doppler tone of class k, in FFT bins over the window. Adjacent classes
/// sit 2 bins apart.
inline constexpr std::array<int, 14> kClassDopplerBins = {3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

/// Multipath CSI scenes: static paths fixed per dataset seed, plus dynamic
/// paths whose phase rotates at the class Doppler frequency. Labels are
/// balanced (i mod K) and shuffled. Window i gets t_win = i.
std::vector<Window> generate_dataset(const DatasetSpec& spec);

}  // namespace zks::signal
