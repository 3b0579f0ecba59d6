#include "zks/policy/action.hpp"

#include <cmath>

#include "json.hpp"
#include "zks/common/errors.hpp"
#include "zks/encoder/quantized_model.hpp"

namespace zks::policy {

std::string ActionRecord::to_json() const {
    nlohmann::ordered_json j;
    j["zone"] = zone;
    j["target"] = target;
    j["decision"] = policy::to_string(decision);
    j["basis"] = basis;
    j["confidence"] = confidence;
    return j.dump();
}

ActionRecord decide(std::span<const std::int64_t> logits_q, std::int32_t u_q, const calibrate::CalibrationProfile& profile,
                    const Context& context, const PolicyTree& tree) {
    if (logits_q.size() != tree.n_classes()) throw PolicyError("logit count does not match the policy tree");
    if (u_q < 0 || u_q > kConfidenceScale) throw PolicyError("confidence outside [0, 128]");
    ActionRecord r;
    r.zone = context.zone;
    r.target = context.target;
    r.confidence = static_cast<double>(u_q) / static_cast<double>(kConfidenceScale);
    if (u_q < profile.tau_q()) {
        r.decision = Decision::abstain;
        r.basis = {kLowConfidenceBasis};
        return r;
    }
    const auto [top, margin] = encoder::top_margin(logits_q);
    const Node& leaf = tree.nodes()[tree.walk(top, u_q, context.flags)];
    r.decision = leaf.decision;
    r.basis = leaf.basis;
    return r;
}

bool validate_action(const ActionRecord& r) {
    if (r.zone.empty()) return false;
    if (static_cast<std::size_t>(r.decision) >= kDecisionCount) return false;
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) return false;
    for (const auto& b : r.basis) {
        if (b.empty()) return false;
    }
    return true;
}

bool validate_action_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object() || j.size() != 5) return false;
        ActionRecord r;
        r.zone = j.at("zone").get<std::string>();
        r.target = j.at("target").get<std::string>();
        const auto d = parse_decision(j.at("decision").get<std::string>());
        if (!d) return false;
        r.decision = *d;
        r.basis = j.at("basis").get<std::vector<std::string>>();
        if (!j.at("confidence").is_number()) return false;
        r.confidence = j.at("confidence").get<double>();
        return validate_action(r);
    } catch (const nlohmann::json::exception&) {
        return false;
    }
}

}  // namespace zks::policy
