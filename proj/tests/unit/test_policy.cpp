#include <functional>

#include "doctest.h"
#include "zks/calibrate/profile.hpp"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/policy/action.hpp"
#include "zks/policy/compile.hpp"
#include "zks/policy/tree.hpp"

using namespace zks;
using namespace zks::policy;

namespace {

constexpr std::size_t kClasses = 5;

calibrate::CalibrationProfile profile(double tau) { return {1.0, tau, "data", zkp::Fp(7), 0.5, 15}; }

// Random tree in pre-order, thresholds on the 1/128 grid.
PolicyTree random_tree(Rng& rng, std::size_t max_depth = 6) {
    std::vector<Node> nodes;
    const std::function<std::uint32_t(std::size_t)> grow = [&](std::size_t depth) -> std::uint32_t {
        const auto idx = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();
        if (depth == max_depth || rng.uniform() < 0.3) {
            nodes[idx].decision = static_cast<Decision>(rng.below(kDecisionCount));
            nodes[idx].basis = {"leaf" + std::to_string(idx)};
            return idx;
        }
        switch (rng.below(3)) {
            case 0:
                nodes[idx].predicate = Predicate::class_is(static_cast<std::uint32_t>(rng.below(kClasses)));
                break;
            case 1:
                nodes[idx].predicate = Predicate::confidence_at_least(static_cast<double>(rng.below(129)) / 128.0);
                break;
            default:
                nodes[idx].predicate = Predicate::flag_is(static_cast<std::uint32_t>(rng.below(4)), rng.below(2) == 1);
        }
        const auto t = grow(depth + 1);
        const auto f = grow(depth + 1);
        nodes[idx].if_true = t;
        nodes[idx].if_false = f;
        return idx;
    };
    grow(0);
    return PolicyTree(std::move(nodes), kClasses);
}

// Independent interpreter: integer comparisons only, recursive walk.
struct Oracle {
    Decision decision;
    std::vector<std::string> basis;
};

Oracle interpret(const PolicyTree& tree, std::span<const std::int64_t> logits, std::int64_t u_q, std::int64_t tau_q,
                 std::uint32_t flags) {
    if (u_q < tau_q) return {Decision::abstain, {"low_confidence"}};
    std::size_t arg = 0;
    for (std::size_t k = 1; k < logits.size(); ++k) {
        if (logits[k] > logits[arg]) arg = k;
    }
    const std::function<Oracle(std::size_t)> at = [&](std::size_t i) -> Oracle {
        const Node& n = tree.nodes()[i];
        if (!n.predicate) return {n.decision, n.basis};
        bool yes = false;
        const Predicate& p = *n.predicate;
        if (p.kind == Predicate::Kind::class_is) yes = arg == p.class_id;
        if (p.kind == Predicate::Kind::confidence_at_least) yes = u_q >= static_cast<std::int64_t>(p.threshold * 128.0);
        if (p.kind == Predicate::Kind::flag_is) yes = (((flags >> p.flag) & 1u) == 1u) == p.flag_value;
        return at(yes ? n.if_true : n.if_false);
    };
    return at(0);
}

struct Input {
    std::vector<std::int64_t> logits;
    std::int32_t u_q;
    Context ctx;
};

Input random_input(Rng& rng) {
    Input in;
    for (std::size_t k = 0; k < kClasses; ++k) in.logits.push_back(static_cast<std::int64_t>(rng.below(9)) - 4);
    in.u_q = static_cast<std::int32_t>(rng.below(129));
    in.ctx = {"zone-" + std::to_string(rng.below(3)), "door", static_cast<std::uint32_t>(rng.below(16))};
    return in;
}

}  // namespace

TEST_CASE("decisions have closed string forms") {
    for (std::size_t i = 0; i < kDecisionCount; ++i) {
        const auto d = static_cast<Decision>(i);
        CHECK(parse_decision(to_string(d)) == d);
    }
    CHECK_FALSE(parse_decision("open").has_value());
}

TEST_CASE("zero confidence abstains for any tree") {
    Rng rng(1);
    const auto prof = profile(0.3);
    for (int i = 0; i < 100; ++i) {
        const auto tree = random_tree(rng);
        const auto in = random_input(rng);
        const auto r = decide(in.logits, 0, prof, in.ctx, tree);
        CHECK(r.decision == Decision::abstain);
        CHECK(r.basis == std::vector<std::string>{kLowConfidenceBasis});
    }
}

TEST_CASE("single-leaf tree passes its leaf through above the threshold") {
    const auto tree = PolicyTree::leaf(Decision::allow, {"presence"}, kClasses);
    const std::vector<std::int64_t> logits = {0, 3, 1, 0, 0};
    const Context ctx{"lab", "door", 0};
    const auto prof = profile(0.5);
    const auto r = decide(logits, 64, prof, ctx, tree);
    CHECK(r.decision == Decision::allow);
    CHECK(r.basis == std::vector<std::string>{"presence"});
    CHECK(r.confidence == 0.5);
    CHECK(r.zone == "lab");
    CHECK(decide(logits, 63, prof, ctx, tree).decision == Decision::abstain);
}

TEST_CASE("decide agrees with an independent interpreter") {
    Rng rng(2);
    std::size_t abstains = 0;
    for (int i = 0; i < 10000; ++i) {
        if (i % 100 == 0) rng.next_u64();
        const auto tree = random_tree(rng);
        const auto in = random_input(rng);
        const double tau = static_cast<double>(rng.below(129)) / 128.0;
        const auto prof = profile(tau);
        const auto got = decide(in.logits, in.u_q, prof, in.ctx, tree);
        const auto want = interpret(tree, in.logits, in.u_q, prof.tau_q(), in.ctx.flags);
        CHECK(got.decision == want.decision);
        CHECK(got.basis == want.basis);
        abstains += got.decision == Decision::abstain;
    }
    CHECK(abstains > 0);
}

TEST_CASE("abstain dominance and schema closure") {
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const auto tree = random_tree(rng);
        const auto in = random_input(rng);
        const auto prof = profile(static_cast<double>(1 + rng.below(128)) / 128.0);
        const auto u = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(prof.tau_q())));
        const auto low = decide(in.logits, u, prof, in.ctx, tree);
        CHECK(low.decision == Decision::abstain);
        CHECK(validate_action(low));
        const auto any = decide(in.logits, in.u_q, prof, in.ctx, tree);
        CHECK(validate_action(any));
        CHECK(validate_action_json(any.to_json()));
    }
}

TEST_CASE("decide rejects mismatched inputs") {
    const auto tree = PolicyTree::leaf(Decision::allow, {}, kClasses);
    const Context ctx{"lab", "", 0};
    CHECK_THROWS_AS(decide(std::vector<std::int64_t>{1, 2}, 100, profile(0.1), ctx, tree), PolicyError);
    CHECK_THROWS_AS(decide(std::vector<std::int64_t>(kClasses, 0), 129, profile(0.1), ctx, tree), PolicyError);
}

TEST_CASE("action schema validation") {
    ActionRecord r{"kitchen", "door-1", Decision::allow, {"presence"}, 0.75};
    CHECK(validate_action(r));
    CHECK(r.to_json() ==
          R"({"zone":"kitchen","target":"door-1","decision":"allow","basis":["presence"],"confidence":0.75})");
    CHECK(validate_action_json(r.to_json()));

    CHECK_FALSE(validate_action_json(
        R"({"zone":"kitchen","target":"door-1","decision":"open","basis":["presence"],"confidence":0.75})"));
    r.confidence = 1.2;
    CHECK_FALSE(validate_action(r));
    r.confidence = 0.5;
    r.zone.clear();
    CHECK_FALSE(validate_action(r));
    CHECK_FALSE(validate_action_json("{"));
    CHECK_FALSE(validate_action_json(R"({"zone":"k","target":"t","decision":"allow","basis":[],"confidence":0.5,"x":1})"));
    CHECK_FALSE(validate_action_json(R"({"zone":"k","target":"t","decision":"allow","basis":[],"confidence":"high"})"));
}

TEST_CASE("tree validation") {
    Node leaf;
    leaf.decision = Decision::deny;
    Node root;
    root.predicate = Predicate::class_is(1);
    root.if_true = 1;
    root.if_false = 2;
    CHECK_NOTHROW(PolicyTree({root, leaf, leaf}, kClasses));

    Node back = root;
    back.if_true = 0;
    CHECK_THROWS_AS(PolicyTree({back, leaf, leaf}, kClasses), PolicyError);
    Node shared = root;
    shared.if_false = 1;
    CHECK_THROWS_AS(PolicyTree({shared, leaf, leaf}, kClasses), PolicyError);
    Node bad_class = root;
    bad_class.predicate = Predicate::class_is(kClasses);
    CHECK_THROWS_AS(PolicyTree({bad_class, leaf, leaf}, kClasses), PolicyError);
    Node bad_flag = root;
    bad_flag.predicate = Predicate::flag_is(kMaxFlags, true);
    CHECK_THROWS_AS(PolicyTree({bad_flag, leaf, leaf}, kClasses), PolicyError);
    Node bad_tau = root;
    bad_tau.predicate = Predicate::confidence_at_least(1.5);
    CHECK_THROWS_AS(PolicyTree({bad_tau, leaf, leaf}, kClasses), PolicyError);
    CHECK_THROWS_AS(PolicyTree({}, kClasses), PolicyError);

    // three predicates chained through the false branch, bound of 2
    std::vector<Node> chain;
    for (std::uint32_t i = 0; i < 3; ++i) {
        Node n;
        n.predicate = Predicate::flag_is(i, true);
        n.if_true = 2 * i + 1;
        n.if_false = 2 * i + 2;
        chain.push_back(n);
        chain.push_back(leaf);
    }
    chain.push_back(leaf);
    CHECK(PolicyTree(chain, kClasses).depth() == 3);
    CHECK_THROWS_AS(PolicyTree(chain, kClasses, 2), PolicyError);
}

TEST_CASE("tree serialization, JSON and hash") {
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        const auto tree = random_tree(rng);
        const auto back = PolicyTree::deserialize(tree.serialize());
        CHECK(back.serialize() == tree.serialize());
        CHECK(back.hash() == tree.hash());
        const auto from_json = PolicyTree::from_json(tree.to_json(), kClasses);
        CHECK(from_json.serialize() == tree.serialize());
    }
    const auto a = PolicyTree::leaf(Decision::allow, {"x"}, kClasses);
    const auto b = PolicyTree::leaf(Decision::deny, {"x"}, kClasses);
    CHECK(a.hash() != b.hash());
    auto bytes = a.serialize();
    bytes.pop_back();
    CHECK_THROWS_AS(PolicyTree::deserialize(bytes), FormatError);
    CHECK_THROWS_AS(PolicyTree::from_json(R"({"decision":"open"})", kClasses), PolicyError);
    CHECK_THROWS_AS(PolicyTree::from_json(R"({"if":{"class":1},"then":{"decision":"allow"}})", kClasses), PolicyError);
    CHECK_THROWS_AS(PolicyTree::from_json("[", kClasses), PolicyError);
}

TEST_CASE("compiling a single leaf gives one unconditional fragment") {
    const auto c = compile_tree(PolicyTree::leaf(Decision::alarm, {"motion"}, kClasses));
    REQUIRE(c.fragments.size() == 1);
    CHECK(c.fragments[0].path.empty());
    CHECK(c.fragments[0].decision == Decision::alarm);
}

TEST_CASE("compiling a confidence split encodes the threshold on the u_q grid") {
    const auto tree = PolicyTree::from_json(
        R"({"if":{"confidence_at_least":0.75},"then":{"decision":"alarm"},"else":{"decision":"allow"}})", kClasses);
    const auto c = compile_tree(tree);
    REQUIRE(c.fragments.size() == 2);
    REQUIRE(c.fragments[0].path.size() == 1);
    const auto& cmp = c.fragments[0].path[0];
    CHECK(cmp.var == Comparison::Var::confidence);
    CHECK(cmp.op == Comparison::Op::ge);
    CHECK(cmp.constant == 96);
    CHECK(c.fragments[1].path[0].op == Comparison::Op::lt);
    CHECK(cmp.describe() == "u_q >= 96");

    const auto off_grid = PolicyTree::from_json(
        R"({"if":{"confidence_at_least":0.7},"then":{"decision":"alarm"},"else":{"decision":"allow"}})", kClasses);
    CHECK_THROWS_AS(compile_tree(off_grid), CompileError);
}

TEST_CASE("compiled fragments agree with decide") {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const auto tree = random_tree(rng);
        const auto compiled = compile_tree(tree);
        const auto in = random_input(rng);
        const auto prof = profile(0.0);
        const auto r = decide(in.logits, in.u_q, prof, in.ctx, tree);
        std::size_t arg = 0;
        for (std::size_t k = 1; k < kClasses; ++k) {
            if (in.logits[k] > in.logits[arg]) arg = k;
        }
        const auto& f = compiled.select(arg, in.u_q, in.ctx.flags);
        CHECK(f.decision == r.decision);
        CHECK(f.basis == r.basis);
    }
}
