#include "zks/encoder/trainer.hpp"

#include <cmath>
#include <numeric>

#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"

namespace zks::encoder {

std::vector<std::vector<double>> pooled_features(const FloatModel& m, std::span<const signal::Window> windows) {
    std::vector<std::vector<double>> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(forward(m, w).pooled);
    return out;
}

TrainReport train_head(FloatModel& m, std::span<const signal::Window> windows, const TrainConfig& cfg) {
    if (windows.empty()) throw ParameterError("training needs windows");
    if (cfg.batch == 0 || !(cfg.learning_rate > 0.0) || cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
        throw ParameterError("invalid training hyperparameters");
    }
    const std::size_t K = m.config.n_classes, L = m.config.d_lat, D = m.config.d0;
    for (const auto& w : windows) {
        if (w.label() < 0 || static_cast<std::size_t>(w.label()) >= K) throw ParameterError("label out of range");
    }
    auto feats = pooled_features(m, windows);
    const std::size_t N = feats.size();

    // train on standardized features, folded into the latent map afterwards
    std::vector<double> mu(D, 0.0), sd(D, 0.0);
    for (const auto& f : feats) {
        for (std::size_t c = 0; c < D; ++c) mu[c] += f[c] / static_cast<double>(N);
    }
    for (const auto& f : feats) {
        for (std::size_t c = 0; c < D; ++c) sd[c] += (f[c] - mu[c]) * (f[c] - mu[c]) / static_cast<double>(N);
    }
    for (auto& s : sd) s = s > 1e-24 ? std::sqrt(s) : 1.0;
    for (auto& f : feats) {
        for (std::size_t c = 0; c < D; ++c) f[c] = (f[c] - mu[c]) / sd[c];
    }

    Rng rng(derive_seed(cfg.seed, 0x747261696e));
    Linear& lat = m.latent;
    Linear& head = m.head;
    Linear& ab = m.abstain;
    for (auto& v : lat.w.data) v = rng.normal() / std::sqrt(static_cast<double>(D));
    std::fill(lat.b.begin(), lat.b.end(), 0.0);
    for (auto& v : head.w.data) v = rng.normal() * 0.1 / std::sqrt(static_cast<double>(L));
    std::fill(head.b.begin(), head.b.end(), 0.0);

    std::vector<double> v_lw(lat.w.data.size(), 0.0), v_lb(L, 0.0), v_hw(head.w.data.size(), 0.0), v_hb(K, 0.0),
        v_aw(L, 0.0), v_ab(1, 0.0);
    std::vector<double> g_lw, g_lb, g_hw, g_hb, g_aw, g_ab;
    auto step = [&](std::vector<double>& p, std::vector<double>& vel, const std::vector<double>& g, double scale) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            vel[i] = cfg.momentum * vel[i] - cfg.learning_rate * g[i] * scale;
            p[i] += vel[i];
        }
    };

    TrainReport rep;
    std::vector<std::size_t> order(N);
    for (std::size_t i = 0; i < N; ++i) order[i] = i;
    std::size_t cursor = N;
    for (std::size_t it = 0; it < cfg.steps; ++it) {
        g_lw.assign(lat.w.data.size(), 0.0);
        g_lb.assign(L, 0.0);
        g_hw.assign(head.w.data.size(), 0.0);
        g_hb.assign(K, 0.0);
        g_aw.assign(L, 0.0);
        g_ab.assign(1, 0.0);
        const std::size_t B = std::min(cfg.batch, N);
        double loss = 0.0;
        for (std::size_t bi = 0; bi < B; ++bi) {
            if (cursor == N) {
                for (std::size_t i = N; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
                cursor = 0;
            }
            const std::size_t idx = order[cursor++];
            const auto& x = feats[idx];
            const auto y = static_cast<std::size_t>(windows[idx].label());
            const auto r = forward_head(m, x);
            double mx = -1e300;
            for (double f : r.logits) mx = std::max(mx, f);
            double z = 0.0;
            for (double f : r.logits) z += std::exp(f - mx);
            loss += mx + std::log(z) - r.logits[y];
            std::vector<double> gz(L, 0.0);
            for (std::size_t k = 0; k < K; ++k) {
                const double gf = std::exp(r.logits[k] - mx) / z - (k == y ? 1.0 : 0.0);
                g_hb[k] += gf;
                for (std::size_t j = 0; j < L; ++j) {
                    g_hw[k * L + j] += gf * r.latent[j];
                    gz[j] += gf * head.w(k, j);
                }
            }
            for (std::size_t j = 0; j < L; ++j) {
                g_lb[j] += gz[j];
                for (std::size_t c = 0; c < D; ++c) g_lw[j * D + c] += gz[j] * x[c];
            }
            const double correct = argmax(r.logits) == y ? 1.0 : 0.0;
            const double ga = 1.0 / (1.0 + std::exp(-r.u_raw)) - correct;
            g_ab[0] += ga;
            for (std::size_t j = 0; j < L; ++j) g_aw[j] += ga * r.latent[j];
        }
        const double inv = 1.0 / static_cast<double>(B);
        step(lat.w.data, v_lw, g_lw, inv);
        step(lat.b, v_lb, g_lb, inv);
        step(head.w.data, v_hw, g_hw, inv);
        step(head.b, v_hb, g_hb, inv);
        step(ab.w.data, v_aw, g_aw, inv * 0.1);
        step(ab.b, v_ab, g_ab, inv * 0.1);
        rep.final_loss = loss * inv;
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < N; ++i) {
        correct += argmax(forward_head(m, feats[i]).logits) == static_cast<std::size_t>(windows[i].label());
    }
    rep.train_accuracy = static_cast<double>(correct) / static_cast<double>(N);

    // fold the feature standardization into the latent map
    for (std::size_t j = 0; j < L; ++j) {
        double shift = 0.0;
        for (std::size_t c = 0; c < D; ++c) {
            lat.w(j, c) /= sd[c];
            shift += lat.w(j, c) * mu[c];
        }
        lat.b[j] -= shift;
    }
    // softmax ignores a shared shift, so drop the common part of the head
    for (std::size_t j = 0; j < L; ++j) {
        double mean = 0.0;
        for (std::size_t k = 0; k < K; ++k) mean += head.w(k, j) / static_cast<double>(K);
        for (std::size_t k = 0; k < K; ++k) head.w(k, j) -= mean;
    }
    const double b_mean = std::accumulate(head.b.begin(), head.b.end(), 0.0) / static_cast<double>(K);
    for (auto& v : head.b) v -= b_mean;
    return rep;
}

}  // namespace zks::encoder
