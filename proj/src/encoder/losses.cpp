#include "zks/encoder/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "zks/common/errors.hpp"

namespace zks::encoder {
namespace {

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);  // [-pi, pi]
    return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// d cos(a, b) / d a
std::vector<double> cos_grad(std::span<const double> a, std::span<const double> b, double na, double nb, double c) {
    std::vector<double> g(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) g[i] = b[i] / (na * nb) - c * a[i] / (na * na);
    return g;
}

}  // namespace

MsmLoss loss_msm(std::span<const double> x, std::span<const double> x_hat, std::span<const std::size_t> mask) {
    if (x.size() != x_hat.size()) throw ParameterError("reconstruction shape mismatch");
    if (mask.empty()) throw ParameterError("mask must not be empty");
    MsmLoss r;
    r.grad.assign(x.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(mask.size());
    for (std::size_t i : mask) {
        if (i >= x.size()) throw ParameterError("mask index out of range");
        const double d = x_hat[i] - x[i];
        r.value += std::abs(d) * inv;
        r.grad[i] += (d > 0.0 ? inv : d < 0.0 ? -inv : 0.0);
    }
    return r;
}

PhaseLoss loss_phase(std::span<const double> z_a, std::span<const double> z_b, std::size_t frames, std::size_t channels) {
    if (z_a.size() != z_b.size() || z_a.size() != frames * channels * 2) throw ParameterError("latent shape mismatch");
    if (frames < 2 || channels == 0) throw ParameterError("phase loss needs at least two frames");
    PhaseLoss r;
    r.grad_a.assign(z_a.size(), 0.0);
    r.grad_b.assign(z_b.size(), 0.0);
    auto at = [&](std::size_t t, std::size_t s) { return (t * channels + s) * 2; };

    std::vector<double> d;
    std::vector<std::size_t> ts;
    for (std::size_t s = 0; s < channels; ++s) {
        d.clear();
        ts.clear();
        for (std::size_t t = 0; t + 1 < frames; ++t) {
            bool ok = true;
            for (auto z : {z_a, z_b}) {
                for (std::size_t u : {t, t + 1}) {
                    ok &= z[at(u, s)] != 0.0 || z[at(u, s) + 1] != 0.0;
                }
            }
            if (!ok) {
                ++r.masked;
                continue;
            }
            auto ph = [&](std::span<const double> z, std::size_t u) { return std::atan2(z[at(u, s) + 1], z[at(u, s)]); };
            const double inc_a = wrap_angle(ph(z_a, t + 1) - ph(z_a, t));
            const double inc_b = wrap_angle(ph(z_b, t + 1) - ph(z_b, t));
            d.push_back(inc_a - inc_b);
            ts.push_back(t);
        }
        if (d.empty()) continue;
        const double n = static_cast<double>(d.size());
        double mean = 0.0;
        for (double v : d) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : d) var += (v - mean) * (v - mean);
        var /= n;
        r.value += var / static_cast<double>(channels);

        // d phase / d (re, im) = (-im, re) / |z|^2
        auto add_phase_grad = [&](std::span<const double> z, std::vector<double>& g, std::size_t u, double w) {
            const double re = z[at(u, s)], im = z[at(u, s) + 1];
            const double r2 = re * re + im * im;
            g[at(u, s)] += w * -im / r2;
            g[at(u, s) + 1] += w * re / r2;
        };
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double gd = 2.0 * (d[i] - mean) / n / static_cast<double>(channels);
            add_phase_grad(z_a, r.grad_a, ts[i] + 1, gd);
            add_phase_grad(z_a, r.grad_a, ts[i], -gd);
            add_phase_grad(z_b, r.grad_b, ts[i] + 1, -gd);
            add_phase_grad(z_b, r.grad_b, ts[i], gd);
        }
    }
    return r;
}

NceLoss loss_nce(std::span<const double> p, std::span<const double> t, const std::vector<std::vector<double>>& negatives,
                 double tau) {
    if (!(tau > 0.0)) throw ParameterError("temperature must be positive");
    if (p.size() != t.size() || p.empty()) throw ParameterError("vector shape mismatch");
    const double np = norm2(p), nt = norm2(t);
    if (np == 0.0 || nt == 0.0) throw ParameterError("zero vector in contrastive loss");

    std::vector<std::span<const double>> cands{t};
    std::vector<double> norms{nt};
    for (const auto& n : negatives) {
        if (n.size() != p.size()) throw ParameterError("vector shape mismatch");
        const double nn = norm2(n);
        if (nn == 0.0) throw ParameterError("zero vector in contrastive loss");
        cands.emplace_back(n);
        norms.push_back(nn);
    }
    std::vector<double> cosv(cands.size()), logit(cands.size());
    double mx = -1e300;
    for (std::size_t j = 0; j < cands.size(); ++j) {
        cosv[j] = dot(p, cands[j]) / (np * norms[j]);
        logit[j] = cosv[j] / tau;
        mx = std::max(mx, logit[j]);
    }
    double z = 0.0;
    for (double l : logit) z += std::exp(l - mx);
    const double lse = mx + std::log(z);

    NceLoss r;
    r.value = lse - logit[0];
    r.grad_p.assign(p.size(), 0.0);
    for (std::size_t j = 0; j < cands.size(); ++j) {
        // d value / d logit_j = softmax_j - [j == 0]
        const double g = (std::exp(logit[j] - lse) - (j == 0 ? 1.0 : 0.0)) / tau;
        const auto gp = cos_grad(p, cands[j], np, norms[j], cosv[j]);
        for (std::size_t i = 0; i < p.size(); ++i) r.grad_p[i] += g * gp[i];
        auto gc = cos_grad(cands[j], p, norms[j], np, cosv[j]);
        for (auto& v : gc) v *= g;
        if (j == 0) {
            r.grad_t = std::move(gc);
        } else {
            r.grad_neg.push_back(std::move(gc));
        }
    }
    return r;
}

double loss_pretrain(const PretrainParts& parts, double lambda1, double lambda2, double lambda3) {
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0) throw ParameterError("loss weights must be non-negative");
    return lambda1 * parts.msm + lambda2 * parts.phase + lambda3 * parts.nce;
}

CalibratedCe loss_calibrated_ce(const Matrix& logits, std::span<const int> labels, double temperature) {
    if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
    if (logits.rows != labels.size() || logits.rows == 0 || logits.cols == 0) throw ParameterError("logit shape mismatch");
    CalibratedCe r;
    const double T = temperature;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= logits.cols) throw ParameterError("label out of range");
        double mx = -1e300;
        for (std::size_t k = 0; k < logits.cols; ++k) mx = std::max(mx, logits(i, k) / T);
        double z = 0.0, zs = 0.0;
        for (std::size_t k = 0; k < logits.cols; ++k) {
            const double e = std::exp(logits(i, k) / T - mx);
            z += e;
            zs += e * logits(i, k);
        }
        const double fy = logits(i, static_cast<std::size_t>(y));
        r.value += mx + std::log(z) - fy / T;
        // d/dT [lse(f/T) - f_y/T] = (f_y - E_softmax[f]) / T^2
        r.grad_t += (fy - zs / z) / (T * T);
    }
    r.value /= static_cast<double>(logits.rows);
    r.grad_t /= static_cast<double>(logits.rows);
    return r;
}

}  // namespace zks::encoder
