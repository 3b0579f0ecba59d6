#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "zks/zkp/circuit.hpp"
#include "zks/zkp/proof.hpp"
#include "zks/zkp/registry.hpp"

namespace zks::zkp {

enum class Reject : std::uint8_t { none, malformed, unknown_hash, bad_binding, bad_path, bad_constraint };

std::string_view to_string(Reject r);

struct VerifyResult {
    bool accepted = false;
    Reject reason = Reject::none;
    std::size_t instance = 0;  // first failing instance, when one is identified
    bool insecure = false;     // k below the default for this circuit
    std::string detail;
};

/// Total: every malformed or dishonest input yields a reject reason.
VerifyResult verify(const Circuit& circuit, const Statement& statement, const Proof& proof);
/// Accepts only when every instance passes.
VerifyResult verify_batch(const Circuit& circuit, std::span<const Statement> statements, const Proof& proof);
/// Checks against an explicit system, which must be the variant the
/// statements select.
VerifyResult verify_system(const ConstraintSystem& cs, std::span<const Statement> statements, const Proof& proof);
/// Resolves the circuit by the statements' model hash.
VerifyResult verify_registered(const Registry& registry, std::span<const Statement> statements, const Proof& proof);

}  // namespace zks::zkp
