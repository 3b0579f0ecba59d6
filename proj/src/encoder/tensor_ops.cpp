#include "zks/encoder/tensor_ops.hpp"

#include <algorithm>
#include <cmath>

#include "zks/common/errors.hpp"

namespace zks::encoder {

std::vector<double> apply_linear(std::span<const double> x, std::size_t n, const Linear& l) {
    const std::size_t in = l.in(), out = l.out();
    if (x.size() != n * in) throw ParameterError("linear layer input has the wrong width");
    std::vector<double> y(n * out);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.data() + i * in;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wo = l.w.data.data() + o * in;
            double acc = l.b[o];
            for (std::size_t c = 0; c < in; ++c) acc += wo[c] * xi[c];
            y[i * out + o] = acc;
        }
    }
    return y;
}

std::vector<double> apply_affine(std::span<const double> x, const Affine& a) {
    const std::size_t C = a.gamma.size();
    if (C == 0 || x.size() % C != 0) throw ParameterError("affine input has the wrong width");
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a.gamma[i % C] * x[i] + a.beta[i % C];
    return y;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

AttentionTrace group_attention(std::span<const double> x, std::size_t channels,
                               const std::vector<std::vector<std::size_t>>& groups, const AttentionWeights& w) {
    const std::size_t n = x.size() / channels;
    AttentionTrace tr;
    tr.q = apply_linear(x, n, w.q);
    tr.k = apply_linear(x, n, w.k);
    tr.v = apply_linear(x, n, w.v);
    const std::size_t d = w.q.out();
    const std::size_t dv = w.v.out();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    tr.mixed.assign(n * dv, 0.0);
    std::vector<double> p;
    for (const auto& g : groups) {
        p.resize(g.size());
        for (std::size_t i : g) {
            double mx = -1e300;
            for (std::size_t j = 0; j < g.size(); ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < d; ++c) s += tr.q[i * d + c] * tr.k[g[j] * d + c];
                p[j] = s * inv_sqrt_d;
                mx = std::max(mx, p[j]);
            }
            double z = 0.0;
            for (auto& v : p) {
                v = std::exp(v - mx);
                z += v;
            }
            for (std::size_t j = 0; j < g.size(); ++j) {
                const double a = p[j] / z;
                for (std::size_t c = 0; c < dv; ++c) tr.mixed[i * dv + c] += a * tr.v[g[j] * dv + c];
            }
        }
    }
    tr.out = apply_linear(tr.mixed, n, w.o);
    return tr;
}

std::vector<std::vector<std::size_t>> temporal_groups(std::size_t frames, std::size_t subcarriers, std::size_t w_t) {
    if (w_t == 0) throw ParameterError("temporal window must be positive");
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t s = 0; s < subcarriers; ++s) {
        for (std::size_t t0 = 0; t0 < frames; t0 += w_t) {
            std::vector<std::size_t> g;
            for (std::size_t t = t0; t < std::min(frames, t0 + w_t); ++t) g.push_back(t * subcarriers + s);
            groups.push_back(std::move(g));
        }
    }
    return groups;
}

std::vector<std::vector<std::size_t>> subcarrier_groups(std::size_t frames, std::size_t subcarriers, std::size_t g) {
    if (g == 0) throw ParameterError("subcarrier group size must be positive");
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t s0 = 0; s0 < subcarriers; s0 += g) {
            std::vector<std::size_t> grp;
            for (std::size_t s = s0; s < std::min(subcarriers, s0 + g); ++s) grp.push_back(t * subcarriers + s);
            groups.push_back(std::move(grp));
        }
    }
    return groups;
}

}  // namespace zks::encoder
