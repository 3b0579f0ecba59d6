#include "zks/signal/window.hpp"

#include <cmath>
#include <cstring>

#include "zks/common/errors.hpp"

namespace zks::signal {

Window::Window(std::size_t frames, std::size_t subcarriers, std::vector<double> data, std::uint64_t t_win,
               std::string zone, int label)
    : frames_(frames),
      subcarriers_(subcarriers),
      data_(std::move(data)),
      t_win_(t_win),
      zone_(std::move(zone)),
      label_(label) {
    if (!valid_frames(frames)) throw ParameterError("window frames must be 64, 96 or 128");
    if (subcarriers == 0) throw ParameterError("window needs at least one subcarrier");
    if (data_.size() != frames * subcarriers * 2) throw ParameterError("window data size does not match T x S x 2");
    if (label < 0) throw ParameterError("window label must be non-negative");
    for (double v : data_) {
        if (!std::isfinite(v)) throw ParameterError("window contains non-finite samples");
    }
}

Window Window::zeros(std::size_t frames, std::size_t subcarriers) {
    return Window(frames, subcarriers, std::vector<double>(frames * subcarriers * 2, 0.0));
}

Window Window::with_data(std::vector<double> data) const {
    return Window(frames_, subcarriers_, std::move(data), t_win_, zone_, label_);
}

Window Window::with_t_win(std::uint64_t t_win) const {
    Window out = *this;
    out.t_win_ = t_win;
    return out;
}

double Window::energy() const {
    double e = 0.0;
    for (double v : data_) e += v * v;
    return e;
}

bool bitwise_equal(const Window& a, const Window& b) {
    return a.frames() == b.frames() && a.subcarriers() == b.subcarriers() && a.t_win() == b.t_win() &&
           a.zone() == b.zone() && a.label() == b.label() &&
           std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

Stats compute_stats(std::span<const Window> train) {
    if (train.empty()) throw ParameterError("statistics need a non-empty training split");
    const std::size_t S = train.front().subcarriers();
    Stats stats;
    stats.subcarriers = S;
    stats.mean.assign(S * 2, 0.0);
    stats.stddev.assign(S * 2, 0.0);
    std::vector<double> sq(S * 2, 0.0);
    double count = 0.0;
    for (const auto& w : train) {
        if (w.subcarriers() != S) throw ParameterError("training windows disagree on subcarrier count");
        for (std::size_t t = 0; t < w.frames(); ++t) {
            for (std::size_t k = 0; k < S * 2; ++k) stats.mean[k] += w.data()[t * S * 2 + k];
        }
        count += static_cast<double>(w.frames());
    }
    for (auto& m : stats.mean) m /= count;
    // second pass for numerically stable variance
    for (const auto& w : train) {
        for (std::size_t t = 0; t < w.frames(); ++t) {
            for (std::size_t k = 0; k < S * 2; ++k) {
                const double d = w.data()[t * S * 2 + k] - stats.mean[k];
                sq[k] += d * d;
            }
        }
    }
    for (std::size_t k = 0; k < S * 2; ++k) stats.stddev[k] = std::sqrt(sq[k] / count);
    return stats;
}

Window standardize(const Window& w, const Stats& stats) {
    const std::size_t S = w.subcarriers();
    if (stats.subcarriers != S || stats.mean.size() != S * 2 || stats.stddev.size() != S * 2) {
        throw ParameterError("statistics do not match the window's subcarrier count");
    }
    for (double sd : stats.stddev) {
        if (!(sd > 0.0)) throw DegenerateStatsError("standardization needs std > 0 on every subcarrier");
    }
    std::vector<double> out(w.data().begin(), w.data().end());
    for (std::size_t t = 0; t < w.frames(); ++t) {
        for (std::size_t k = 0; k < S * 2; ++k) {
            auto& v = out[t * S * 2 + k];
            v = (v - stats.mean[k]) / stats.stddev[k];
        }
    }
    return w.with_data(std::move(out));
}

}  // namespace zks::signal
