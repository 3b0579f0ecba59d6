#include "zks/policy/tree.hpp"

#include <cmath>
#include <functional>

#include "json.hpp"
#include "zks/common/bytes.hpp"
#include "zks/common/errors.hpp"
#include "zks/zkp/sponge.hpp"

namespace zks::policy {
namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kMaxNodes = 1u << 16;

using Json = nlohmann::json;

}  // namespace

const char* to_string(Decision d) {
    switch (d) {
        case Decision::allow:
            return "allow";
        case Decision::deny:
            return "deny";
        case Decision::alarm:
            return "alarm";
        case Decision::abstain:
            return "abstain";
    }
    return "?";
}

std::optional<Decision> parse_decision(const std::string& s) {
    for (std::size_t i = 0; i < kDecisionCount; ++i) {
        const auto d = static_cast<Decision>(i);
        if (s == to_string(d)) return d;
    }
    return std::nullopt;
}

bool Predicate::holds(std::size_t argmax, std::int64_t u_q, std::uint32_t flags) const {
    switch (kind) {
        case Kind::class_is:
            return argmax == class_id;
        case Kind::confidence_at_least:
            return static_cast<double>(u_q) / static_cast<double>(kConfidenceScale) >= threshold;
        case Kind::flag_is:
            return (((flags >> flag) & 1u) != 0) == flag_value;
    }
    return false;
}

PolicyTree::PolicyTree(std::vector<Node> nodes, std::size_t n_classes, std::size_t max_depth)
    : nodes_(std::move(nodes)), n_classes_(n_classes), max_depth_(max_depth) {
    if (nodes_.empty()) throw PolicyError("policy tree has no nodes");
    if (nodes_.size() > kMaxNodes) throw PolicyError("policy tree is too large");
    if (n_classes_ < 2) throw PolicyError("policy tree needs at least two classes");
    if (max_depth_ == 0) throw PolicyError("depth bound must be positive");
    std::vector<int> parents(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.is_leaf()) {
            if (static_cast<std::size_t>(n.decision) >= kDecisionCount) throw PolicyError("unknown decision");
            for (const auto& b : n.basis) {
                if (b.empty() || b.size() > 64) throw PolicyError("basis entries must be short non-empty strings");
            }
            continue;
        }
        const Predicate& p = *n.predicate;
        switch (p.kind) {
            case Predicate::Kind::class_is:
                if (p.class_id >= n_classes_) throw PolicyError("predicate class out of range");
                break;
            case Predicate::Kind::confidence_at_least:
                if (!(p.threshold >= 0.0 && p.threshold <= 1.0)) throw PolicyError("confidence threshold outside [0, 1]");
                break;
            case Predicate::Kind::flag_is:
                if (p.flag >= kMaxFlags) throw PolicyError("context flag out of range");
                break;
            default:
                throw PolicyError("unknown predicate kind");
        }
        for (std::uint32_t c : {n.if_true, n.if_false}) {
            if (c <= i || c >= nodes_.size()) throw PolicyError("child must be a later node");
            ++parents[c];
        }
    }
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (parents[i] != 1) throw PolicyError("every non-root node needs exactly one parent");
    }
    if (depth() > max_depth_) throw PolicyError("policy tree exceeds the depth bound");
}

PolicyTree PolicyTree::leaf(Decision d, std::vector<std::string> basis, std::size_t n_classes) {
    Node n;
    n.decision = d;
    n.basis = std::move(basis);
    return PolicyTree({n}, n_classes);
}

std::size_t PolicyTree::depth() const {
    // children follow parents, so one forward pass suffices
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].is_leaf()) {
            best = std::max(best, d[i]);
            continue;
        }
        d[nodes_[i].if_true] = d[i] + 1;
        d[nodes_[i].if_false] = d[i] + 1;
    }
    return best;
}

std::size_t PolicyTree::walk(std::size_t argmax, std::int64_t u_q, std::uint32_t flags) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const Node& n = nodes_[i];
        i = n.predicate->holds(argmax, u_q, flags) ? n.if_true : n.if_false;
    }
    return i;
}

std::vector<std::uint8_t> PolicyTree::serialize() const {
    ByteWriter w;
    w.tag("ZKPT");
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(n_classes_));
    w.u32(static_cast<std::uint32_t>(max_depth_));
    w.u32(static_cast<std::uint32_t>(nodes_.size()));
    for (const Node& n : nodes_) {
        w.u8(n.is_leaf() ? 0 : 1);
        if (n.is_leaf()) {
            w.u8(static_cast<std::uint8_t>(n.decision));
            w.u32(static_cast<std::uint32_t>(n.basis.size()));
            for (const auto& b : n.basis) w.str(b);
        } else {
            const Predicate& p = *n.predicate;
            w.u8(static_cast<std::uint8_t>(p.kind));
            w.u32(p.class_id);
            w.f64(p.threshold);
            w.u32(p.flag);
            w.u8(p.flag_value ? 1 : 0);
            w.u32(n.if_true);
            w.u32(n.if_false);
        }
    }
    return w.take();
}

PolicyTree PolicyTree::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("ZKPT");
    if (r.u32() != kVersion) throw FormatError("unsupported policy tree version");
    const std::size_t k = r.u32();
    const std::size_t depth = r.u32();
    const std::size_t count = r.count(2);
    std::vector<Node> nodes(count);
    for (auto& n : nodes) {
        const auto kind = r.u8();
        if (kind == 0) {
            const auto d = r.u8();
            if (d >= kDecisionCount) throw FormatError("unknown decision");
            n.decision = static_cast<Decision>(d);
            const std::size_t nb = r.count(4);
            for (std::size_t i = 0; i < nb; ++i) n.basis.push_back(r.str());
        } else if (kind == 1) {
            Predicate p;
            const auto pk = r.u8();
            if (pk > 2) throw FormatError("unknown predicate kind");
            p.kind = static_cast<Predicate::Kind>(pk);
            p.class_id = r.u32();
            p.threshold = r.f64();
            p.flag = r.u32();
            const auto fv = r.u8();
            if (fv > 1) throw FormatError("bad flag value");
            p.flag_value = fv == 1;
            n.predicate = p;
            n.if_true = r.u32();
            n.if_false = r.u32();
        } else {
            throw FormatError("unknown node kind");
        }
    }
    r.expect_end();
    try {
        return PolicyTree(std::move(nodes), k, depth);
    } catch (const PolicyError& e) {
        throw FormatError(std::string("invalid policy tree: ") + e.what());
    }
}

zkp::Fp PolicyTree::hash() const {
    return zkp::hash_bytes(serialize(), zkp::Domain::digest);
}

std::string PolicyTree::to_json() const {
    const std::function<Json(std::size_t)> emit = [&](std::size_t i) -> Json {
        const Node& n = nodes_[i];
        Json j;
        if (n.is_leaf()) {
            j["decision"] = to_string(n.decision);
            j["basis"] = n.basis;
            return j;
        }
        const Predicate& p = *n.predicate;
        Json cond;
        switch (p.kind) {
            case Predicate::Kind::class_is:
                cond["class"] = p.class_id;
                break;
            case Predicate::Kind::confidence_at_least:
                cond["confidence_at_least"] = p.threshold;
                break;
            case Predicate::Kind::flag_is:
                cond["flag"] = p.flag;
                cond["is"] = p.flag_value;
                break;
        }
        j["if"] = cond;
        j["then"] = emit(n.if_true);
        j["else"] = emit(n.if_false);
        return j;
    };
    return emit(0).dump(2);
}

PolicyTree PolicyTree::from_json(const std::string& text, std::size_t n_classes, std::size_t max_depth) {
    std::vector<Node> nodes;
    // pre-order layout keeps children after their parent
    const std::function<std::uint32_t(const Json&, std::size_t)> build = [&](const Json& j,
                                                                            std::size_t depth) -> std::uint32_t {
        if (depth > max_depth) throw PolicyError("policy tree exceeds the depth bound");
        const auto idx = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();
        if (j.contains("decision")) {
            const auto d = parse_decision(j.at("decision").get<std::string>());
            if (!d) throw PolicyError("unknown decision \"" + j.at("decision").get<std::string>() + "\"");
            nodes[idx].decision = *d;
            if (j.contains("basis")) nodes[idx].basis = j.at("basis").get<std::vector<std::string>>();
            return idx;
        }
        const Json& c = j.at("if");
        Predicate p;
        if (c.contains("class")) {
            p = Predicate::class_is(c.at("class").get<std::uint32_t>());
        } else if (c.contains("confidence_at_least")) {
            p = Predicate::confidence_at_least(c.at("confidence_at_least").get<double>());
        } else if (c.contains("flag")) {
            p = Predicate::flag_is(c.at("flag").get<std::uint32_t>(), c.value("is", true));
        } else {
            throw PolicyError("unknown predicate");
        }
        nodes[idx].predicate = p;
        const auto t = build(j.at("then"), depth + 1);
        const auto f = build(j.at("else"), depth + 1);
        nodes[idx].if_true = t;
        nodes[idx].if_false = f;
        return idx;
    };
    try {
        build(Json::parse(text), 0);
    } catch (const Json::exception& e) {
        throw PolicyError(std::string("malformed policy tree: ") + e.what());
    }
    return PolicyTree(std::move(nodes), n_classes, max_depth);
}

}  // namespace zks::policy
