#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zks/calibrate/profile.hpp"
#include "zks/policy/tree.hpp"

namespace zks::policy {

struct ActionRecord {
    std::string zone;
    std::string target;
    Decision decision = Decision::abstain;
    std::vector<std::string> basis;
    double confidence = 0.0;

    /// Canonical JSON in the fixed field order zone, target, decision,
    /// basis, confidence; no whitespace.
    std::string to_json() const;
};

/// Basis emitted when the confidence gate forces an abstain.
inline constexpr const char* kLowConfidenceBasis = "low_confidence";

/// Abstains when u_q < tau_q, otherwise walks the tree on (argmax, u_q,
/// flags). argmax breaks ties at the lowest index.
ActionRecord decide(std::span<const std::int64_t> logits_q, std::int32_t u_q, const calibrate::CalibrationProfile& profile,
                    const Context& context, const PolicyTree& tree);

bool validate_action(const ActionRecord& r);
/// Schema check on a serialized record; any parse failure is false.
bool validate_action_json(const std::string& text);

}  // namespace zks::policy
