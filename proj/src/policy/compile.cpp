#include "zks/policy/compile.hpp"

#include <cmath>
#include <functional>

#include "zks/common/errors.hpp"

namespace zks::policy {

bool Comparison::holds(std::size_t argmax, std::int64_t u_q, std::uint32_t flags) const {
    std::int64_t v = 0;
    switch (var) {
        case Var::argmax:
            v = static_cast<std::int64_t>(argmax);
            break;
        case Var::confidence:
            v = u_q;
            break;
        case Var::flag:
            v = (flags >> flag) & 1u;
            break;
    }
    switch (op) {
        case Op::eq:
            return v == constant;
        case Op::ne:
            return v != constant;
        case Op::ge:
            return v >= constant;
        case Op::lt:
            return v < constant;
    }
    return false;
}

std::string Comparison::describe() const {
    static const char* ops[] = {"==", "!=", ">=", "<"};
    std::string lhs = var == Var::argmax ? "argmax" : var == Var::confidence ? "u_q" : "flag" + std::to_string(flag);
    return lhs + " " + ops[static_cast<int>(op)] + " " + std::to_string(constant);
}

const LeafFragment& CompiledPolicy::select(std::size_t argmax, std::int64_t u_q, std::uint32_t flags) const {
    const LeafFragment* hit = nullptr;
    for (const auto& f : fragments) {
        bool all = true;
        for (const auto& c : f.path) all = all && c.holds(argmax, u_q, flags);
        if (!all) continue;
        if (hit) throw CompileError("compiled fragments overlap");
        hit = &f;
    }
    if (!hit) throw CompileError("no compiled fragment matches");
    return *hit;
}

CompiledPolicy compile_tree(const PolicyTree& tree) {
    CompiledPolicy out;
    out.n_classes = tree.n_classes();
    std::vector<Comparison> path;
    const auto& nodes = tree.nodes();
    const std::function<void(std::uint32_t)> visit = [&](std::uint32_t i) {
        const Node& n = nodes[i];
        if (n.is_leaf()) {
            out.fragments.push_back({i, n.decision, n.basis, path});
            return;
        }
        const Predicate& p = *n.predicate;
        Comparison yes, no;
        switch (p.kind) {
            case Predicate::Kind::class_is:
                yes = {Comparison::Var::argmax, 0, Comparison::Op::eq, p.class_id};
                no = {Comparison::Var::argmax, 0, Comparison::Op::ne, p.class_id};
                break;
            case Predicate::Kind::confidence_at_least: {
                const double scaled = p.threshold * static_cast<double>(kConfidenceScale);
                if (scaled != std::floor(scaled)) {
                    throw CompileError("confidence threshold " + std::to_string(p.threshold) + " is not a multiple of 1/128");
                }
                const auto q = static_cast<std::int64_t>(scaled);
                yes = {Comparison::Var::confidence, 0, Comparison::Op::ge, q};
                no = {Comparison::Var::confidence, 0, Comparison::Op::lt, q};
                break;
            }
            case Predicate::Kind::flag_is:
                yes = {Comparison::Var::flag, p.flag, Comparison::Op::eq, p.flag_value ? 1 : 0};
                no = {Comparison::Var::flag, p.flag, Comparison::Op::eq, p.flag_value ? 0 : 1};
                break;
        }
        path.push_back(yes);
        visit(n.if_true);
        path.back() = no;
        visit(n.if_false);
        path.pop_back();
    };
    visit(0);
    return out;
}

}  // namespace zks::policy
