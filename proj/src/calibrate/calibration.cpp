#include "zks/calibrate/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "zks/common/errors.hpp"
#include "zks/encoder/losses.hpp"

namespace zks::calibrate {
namespace {

constexpr double kLogTLo = -3.0;
constexpr double kLogTHi = 3.0;
constexpr double kTolerance = 1e-6;

double log_sum_exp(std::span<const double> v, double scale) {
    double mx = -HUGE_VAL;
    for (double x : v) mx = std::max(mx, x * scale);
    double s = 0.0;
    for (double x : v) s += std::exp(x * scale - mx);
    return mx + std::log(s);
}

}  // namespace

double nll(const Matrix& logits, std::span<const int> labels, double temperature) {
    return encoder::loss_calibrated_ce(logits, labels, temperature).value;
}

double fit_temperature(const Matrix& logits, std::span<const int> labels) {
    if (std::set<int>(labels.begin(), labels.end()).size() < 2) {
        throw ParameterError("temperature fitting needs at least two classes");
    }
    const auto f = [&](double log_t) { return nll(logits, labels, std::exp(log_t)); };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = kLogTLo, b = kLogTHi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > kTolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // the search assumes unimodality; never return worse than the endpoints or T = 1
    double best = 0.5 * (a + b), f_best = f(best);
    for (double cand : {kLogTLo, kLogTHi, 0.0}) {
        const double fv = f(cand);
        if (fv < f_best) {
            best = cand;
            f_best = fv;
        }
    }
    return std::exp(best);
}

double max_softmax(std::span<const double> logits, double temperature) {
    if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
    if (logits.empty()) throw ParameterError("empty logit vector");
    const double inv = 1.0 / temperature;
    const double mx = *std::max_element(logits.begin(), logits.end());
    return std::exp(mx * inv - log_sum_exp(logits, inv));
}

double energy_score(std::span<const double> logits, double temperature) {
    if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
    if (logits.empty()) throw ParameterError("empty logit vector");
    return temperature * log_sum_exp(logits, 1.0 / temperature);
}

std::vector<double> confidences(const Matrix& logits, double temperature, ConfidenceKind kind) {
    std::vector<double> out;
    out.reserve(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const std::span<const double> row(logits.data.data() + i * logits.cols, logits.cols);
        if (kind == ConfidenceKind::max_softmax) {
            out.push_back(max_softmax(row, temperature));
        } else {
            out.push_back(1.0 / (1.0 + std::exp(-energy_score(row, temperature))));
        }
    }
    return out;
}

}  // namespace zks::calibrate
