#include "zks/audit/attacks.hpp"

#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"

namespace zks::audit {
namespace {

AttackOutcome judged(const zkp::VerifyResult& v) {
    return {true, v.accepted, v.reason, v.detail};
}

}  // namespace

AttackOutcome attack_replay(const zkp::Registry& registry, const zkp::ProofBundle& past, std::uint64_t new_t_win,
                            std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x7265706c));
    auto statements = past.statements;
    for (std::size_t i = 0; i < statements.size(); ++i) {
        statements[i].t_win = new_t_win + i;
        statements[i].nonce = zkp::Fp(rng.next_u64() % zkp::Fp::kModulus);
    }
    return judged(zkp::verify_registered(registry, statements, past.proof));
}

AttackOutcome submit_from(const pipeline::Device& device, const zkp::Registry& registry, const signal::Window& raw,
                          std::uint64_t seed) {
    const auto obs = device.observe(raw);
    zkp::Proof proof;
    try {
        proof = zkp::prove(device.circuit(), obs.statement, obs.witness, {std::nullopt, seed});
    } catch (const ProverError& e) {
        return {false, false, zkp::Reject::none, e.what()};
    }
    return judged(zkp::verify_registered(registry, std::span(&obs.statement, 1), proof));
}

AttackOutcome attack_tamper_threshold(const pipeline::Artifacts& registered, const zkp::Registry& registry,
                                      const signal::Window& raw, std::int64_t tau_q_tampered, std::uint64_t seed) {
    auto tampered = registered;
    tampered.profile = registered.profile.with_tau(static_cast<double>(tau_q_tampered) /
                                                   calibrate::CalibrationProfile::kConfidenceScale);
    const pipeline::Device device(std::move(tampered), {.seed = seed});
    return submit_from(device, registry, raw, seed);
}

AttackOutcome attack_rollback(const pipeline::Artifacts& old, const zkp::Registry& registry,
                              const signal::Window& raw, std::uint64_t seed) {
    const pipeline::Device device(old, {.seed = seed});
    return submit_from(device, registry, raw, seed);
}

void CampaignTally::add(const AttackOutcome& o) {
    ++trials;
    if (o.attempted) ++attempted;
    if (o.accepted) ++accepted;
    ++reasons[o.attempted ? std::string(zkp::to_string(o.reason)) : "not-attempted"];
}

}  // namespace zks::audit
