#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "zks/pipeline/pipeline.hpp"
#include "zks/zkp/proof.hpp"
#include "zks/zkp/registry.hpp"
#include "zks/zkp/verifier.hpp"

namespace zks::audit {

/// Result of one attack attempt against the verifier. An attempt that never
/// reaches the verifier (the device refuses to produce a proof) counts as
/// not attempted.
struct AttackOutcome {
    bool attempted = false;
    bool accepted = false;
    zkp::Reject reason = zkp::Reject::none;
    std::string detail;
};

/// Re-submits an archived honest bundle with its windows moved to new_t_win,
/// new_t_win + 1, ... and fresh nonces drawn from seed.
AttackOutcome attack_replay(const zkp::Registry& registry, const zkp::ProofBundle& past, std::uint64_t new_t_win,
                            std::uint64_t seed);

/// A device whose threshold was lowered to tau_q_tampered (in 1/128 units)
/// decides and proves with its own circuit, then submits.
AttackOutcome attack_tamper_threshold(const pipeline::Artifacts& registered, const zkp::Registry& registry,
                                      const signal::Window& raw, std::int64_t tau_q_tampered, std::uint64_t seed);

/// A device still running an older model proves with its own circuit.
AttackOutcome attack_rollback(const pipeline::Artifacts& old, const zkp::Registry& registry,
                              const signal::Window& raw, std::uint64_t seed);

/// Shared by the tamper and rollback attacks: observe, prove, verify.
AttackOutcome submit_from(const pipeline::Device& device, const zkp::Registry& registry, const signal::Window& raw,
                          std::uint64_t seed);

struct CampaignTally {
    std::size_t trials = 0;
    std::size_t attempted = 0;
    std::size_t accepted = 0;
    std::map<std::string, std::size_t> reasons;

    void add(const AttackOutcome& o);
};

}  // namespace zks::audit
