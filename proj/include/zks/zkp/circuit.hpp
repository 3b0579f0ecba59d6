#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zks/encoder/quantized_model.hpp"
#include "zks/policy/compile.hpp"
#include "zks/policy/tree.hpp"
#include "zks/zkp/r1cs.hpp"

namespace zks::calibrate {
class CalibrationProfile;
}

namespace zks::zkp {

/// Latent entries packed 7 per element as entry + 2^(bits-1) in 8-bit lanes.
inline constexpr std::size_t kLanesPerElement = 7;
inline constexpr unsigned kFlagBits = 16;

/// Elements absorbed by the latent commitment: packed latent, flag word, r.
std::vector<Fp> encode_latent(std::span<const std::int8_t> latent, std::uint32_t flags, Fp r, int bits = 8);

/// c = sponge(encode(latent, flags) || r) under the commitment domain.
/// Throws EncodingError for entries outside [-qmax, qmax] or flags past 16 bits.
Fp commit_latent(std::span<const std::int8_t> latent, Fp r, std::uint32_t flags = 0, int bits = 8);

/// Public tuple of one window. The confidence threshold travels as tau_q,
/// its fixed-point encoding in 1/128 units.
struct Statement {
    Fp c;
    Fp h_theta;
    std::int64_t tau_q = 0;
    std::uint64_t t_win = 0;
    Fp nonce;
    policy::Decision action = policy::Decision::abstain;

    static constexpr std::size_t kElements = 6;
    /// Public slot values, in slot order.
    std::array<Fp, kElements> elements() const;
    bool abstains() const { return action == policy::Decision::abstain; }

    std::string to_json() const;
    static Statement from_json(const std::string& text);

    friend bool operator==(const Statement&, const Statement&) = default;
};

/// Secret inputs of one window.
struct WitnessInput {
    std::vector<std::int8_t> latent;
    std::uint32_t flags = 0;
    Fp r;
};

struct CircuitParams {
    encoder::QLinear head;
    int bits = 8;
    encoder::ConfidenceTable table;
    policy::CompiledPolicy policy;
    std::int64_t tau_q = 0;
    Fp h_theta;
    std::size_t max_constraints = std::size_t{1} << 20;
};

/// Head-and-policy circuit of a registered model, in two variants sharing
/// one slot layout. The abstain variant is a prefix of the full one: it
/// keeps the latent commitment (C1) and the model, threshold and window
/// bindings (C2, C3). The full variant appends the decision proof (C4).
class Circuit {
public:
    explicit Circuit(CircuitParams params);

    static Circuit from_model(const encoder::QuantizedModel& qm, const calibrate::CalibrationProfile& profile,
                              const policy::PolicyTree& tree);

    const ConstraintSystem& system(bool full) const { return full ? full_ : prefix_; }
    const CircuitParams& params() const { return params_; }

    std::size_t prefix_constraints() const { return prefix_.size(); }
    std::size_t c4_constraints() const { return full_.size() - prefix_.size(); }
    std::size_t num_slots(bool full) const { return system(full).num_vars; }
    unsigned range_bits() const { return range_bits_; }
    std::size_t sponge_permutations() const;

    /// Smallest margin whose table confidence reaches q; past every margin
    /// the head can produce when no bucket reaches q.
    std::int64_t margin_threshold(std::int64_t q) const;

    /// Witness of the variant selected by the statement's action. Throws
    /// ParameterError on shape mismatch.
    std::vector<Fp> witness(const Statement& s, const WitnessInput& in) const;

private:
    void synthesize(CircuitBuilder& b, const Statement& s, const WitnessInput& in, bool full) const;

    CircuitParams params_;
    std::int64_t logit_bound_ = 0;
    unsigned range_bits_ = 0;
    ConstraintSystem prefix_;
    ConstraintSystem full_;
};

/// Slots 1..6 hold the statement publics in this order.
inline constexpr std::array<Var, Statement::kElements> kPublicSlots = {1, 2, 3, 4, 5, 6};

}  // namespace zks::zkp
