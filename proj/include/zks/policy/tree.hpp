#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zks/zkp/field.hpp"

namespace zks::policy {

enum class Decision : std::uint8_t { allow = 0, deny = 1, alarm = 2, abstain = 3 };

inline constexpr std::size_t kDecisionCount = 4;

const char* to_string(Decision d);
std::optional<Decision> parse_decision(const std::string& s);

inline constexpr std::size_t kMaxFlags = 16;
inline constexpr std::size_t kDefaultMaxDepth = 8;
/// Confidence thresholds live on the 1/128 grid of u_q.
inline constexpr std::int64_t kConfidenceScale = 128;

struct Context {
    std::string zone;
    std::string target;
    std::uint32_t flags = 0;  // bit i is context flag i

    bool flag(std::size_t i) const { return (flags >> i) & 1u; }
};

struct Predicate {
    enum class Kind : std::uint8_t { class_is = 0, confidence_at_least = 1, flag_is = 2 };
    Kind kind = Kind::class_is;
    std::uint32_t class_id = 0;
    double threshold = 0.0;  // real confidence in [0, 1]
    std::uint32_t flag = 0;
    bool flag_value = true;

    static Predicate class_is(std::uint32_t c) { return {Kind::class_is, c, 0.0, 0, true}; }
    static Predicate confidence_at_least(double t) { return {Kind::confidence_at_least, 0, t, 0, true}; }
    static Predicate flag_is(std::uint32_t f, bool v) { return {Kind::flag_is, 0, 0.0, f, v}; }

    /// Evaluated on the committed quantities; u_q in 1/128 units.
    bool holds(std::size_t argmax, std::int64_t u_q, std::uint32_t flags) const;
};

/// A node is a leaf when it has no predicate. Internal nodes branch to
/// if_true / if_false, which must point to later nodes.
struct Node {
    std::optional<Predicate> predicate;
    std::uint32_t if_true = 0;
    std::uint32_t if_false = 0;
    Decision decision = Decision::abstain;
    std::vector<std::string> basis;

    bool is_leaf() const { return !predicate.has_value(); }
};

/// Binary decision tree rooted at node 0.
class PolicyTree {
public:
    PolicyTree(std::vector<Node> nodes, std::size_t n_classes, std::size_t max_depth = kDefaultMaxDepth);

    static PolicyTree leaf(Decision d, std::vector<std::string> basis, std::size_t n_classes);

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t n_classes() const { return n_classes_; }
    std::size_t max_depth() const { return max_depth_; }
    std::size_t depth() const;

    /// Index of the leaf reached on the given inputs.
    std::size_t walk(std::size_t argmax, std::int64_t u_q, std::uint32_t flags) const;

    std::vector<std::uint8_t> serialize() const;
    static PolicyTree deserialize(std::span<const std::uint8_t> bytes);
    zkp::Fp hash() const;

    /// Nested {"if": ..., "then": ..., "else": ...} / {"decision": ..., "basis": [...]}.
    std::string to_json() const;
    static PolicyTree from_json(const std::string& text, std::size_t n_classes,
                                std::size_t max_depth = kDefaultMaxDepth);

private:
    std::vector<Node> nodes_;
    std::size_t n_classes_;
    std::size_t max_depth_;
};

}  // namespace zks::policy
