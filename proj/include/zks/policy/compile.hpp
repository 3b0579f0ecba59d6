#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zks/policy/tree.hpp"

namespace zks::policy {

/// One fixed-point comparison on a committed quantity.
struct Comparison {
    enum class Var : std::uint8_t { argmax = 0, confidence = 1, flag = 2 };
    enum class Op : std::uint8_t { eq = 0, ne = 1, ge = 2, lt = 3 };
    Var var = Var::argmax;
    std::uint32_t flag = 0;  // for Var::flag
    Op op = Op::eq;
    std::int64_t constant = 0;  // class id, u_q units, or 0/1

    bool holds(std::size_t argmax, std::int64_t u_q, std::uint32_t flags) const;
    std::string describe() const;
};

struct LeafFragment {
    std::uint32_t leaf = 0;  // node index in the tree
    Decision decision = Decision::abstain;
    std::vector<std::string> basis;
    std::vector<Comparison> path;  // conjunction
};

struct CompiledPolicy {
    std::vector<LeafFragment> fragments;
    std::size_t n_classes = 0;

    /// The unique fragment whose conjunction holds.
    const LeafFragment& select(std::size_t argmax, std::int64_t u_q, std::uint32_t flags) const;
};

/// Throws CompileError when a confidence threshold is off the 1/128 grid.
CompiledPolicy compile_tree(const PolicyTree& tree);

}  // namespace zks::policy
