#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace zks::signal {

/// A T x S x 2 block of CSI samples (frames x subcarriers x {real, imag}),
/// stored row-major with the real/imag plane innermost.
class Window {
public:
    Window(std::size_t frames, std::size_t subcarriers, std::vector<double> data, std::uint64_t t_win = 0,
           std::string zone = {}, int label = 0);

    static Window zeros(std::size_t frames, std::size_t subcarriers);
    static bool valid_frames(std::size_t frames) { return frames == 64 || frames == 96 || frames == 128; }

    std::size_t frames() const { return frames_; }
    std::size_t subcarriers() const { return subcarriers_; }
    std::size_t size() const { return data_.size(); }

    std::size_t index(std::size_t t, std::size_t s, std::size_t ch) const { return (t * subcarriers_ + s) * 2 + ch; }
    double at(std::size_t t, std::size_t s, std::size_t ch) const { return data_[index(t, s, ch)]; }
    double re(std::size_t t, std::size_t s) const { return data_[index(t, s, 0)]; }
    double im(std::size_t t, std::size_t s) const { return data_[index(t, s, 1)]; }

    std::span<const double> data() const { return data_; }

    std::uint64_t t_win() const { return t_win_; }
    const std::string& zone() const { return zone_; }
    int label() const { return label_; }

    // Same metadata and shape, new samples.
    Window with_data(std::vector<double> data) const;
    Window with_t_win(std::uint64_t t_win) const;

    double energy() const;

private:
    std::size_t frames_;
    std::size_t subcarriers_;
    std::vector<double> data_;
    std::uint64_t t_win_;
    std::string zone_;
    int label_;
};

bool bitwise_equal(const Window& a, const Window& b);

/// Per-(subcarrier, channel) running moments from a training split.
struct Stats {
    std::size_t subcarriers = 0;
    std::vector<double> mean;  // subcarriers * 2
    std::vector<double> stddev;
};

Stats compute_stats(std::span<const Window> train);

/// (x - mean) / std per subcarrier and channel; metadata unchanged.
/// Throws DegenerateStatsError when any std is not strictly positive.
Window standardize(const Window& w, const Stats& stats);

}  // namespace zks::signal
