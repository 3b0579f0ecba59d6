#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace zks::encoder {

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// y = W x + b, with W stored out x in.
struct Linear {
    Matrix w;
    std::vector<double> b;

    Linear() = default;
    Linear(std::size_t in, std::size_t out) : w(out, in), b(out, 0.0) {}

    std::size_t in() const { return w.cols; }
    std::size_t out() const { return w.rows; }
};

// Tokens are rows of a (n x channels) buffer.
std::vector<double> apply_linear(std::span<const double> x, std::size_t n, const Linear& l);

/// Per-channel affine rescaling standing in for a normalization layer.
struct Affine {
    std::vector<double> gamma;
    std::vector<double> beta;
};

std::vector<double> apply_affine(std::span<const double> x, const Affine& a);

double silu(double x);

struct AttentionWeights {
    Linear q, k, v, o;
};

/// Intermediate tensors of one attention pass, all (n x channels).
struct AttentionTrace {
    std::vector<double> q, k, v;
    std::vector<double> mixed;  // softmax(q k^T / sqrt(d)) v within each group
    std::vector<double> out;    // o(mixed)
};

/// Single-head attention restricted to token groups. Every token appears in
/// exactly one group.
AttentionTrace group_attention(std::span<const double> x, std::size_t channels,
                               const std::vector<std::vector<std::size_t>>& groups, const AttentionWeights& w);

// Token index t * S + s.
std::vector<std::vector<std::size_t>> temporal_groups(std::size_t frames, std::size_t subcarriers, std::size_t w_t);
std::vector<std::vector<std::size_t>> subcarrier_groups(std::size_t frames, std::size_t subcarriers, std::size_t g);

}  // namespace zks::encoder
