#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "zks/calibrate/profile.hpp"
#include "zks/encoder/quantized_model.hpp"
#include "zks/policy/tree.hpp"
#include "zks/zkp/circuit.hpp"

namespace zks::zkp {

struct RegistryEntry {
    Fp h_theta;
    Fp backbone_hash;
    Fp head_hash;
    std::int64_t tau_q = 0;
    Fp tree_hash;
    Fp profile_digest;
    std::shared_ptr<const Circuit> circuit;

    /// Metadata only; the circuit is rebuilt from the artifacts.
    std::string to_json() const;
};

/// Append-only map from model hash to the registered operating point.
class Registry {
public:
    /// Idempotent for identical artifacts. Throws RegistryError when the
    /// profile names another model or the hash is already registered with a
    /// different threshold, tree or profile.
    const RegistryEntry& register_model(const encoder::QuantizedModel& qm, const calibrate::CalibrationProfile& profile,
                                        const policy::PolicyTree& tree);

    const RegistryEntry* find(Fp h_theta) const;
    /// Throws RegistryError for an unknown hash.
    const RegistryEntry& at(Fp h_theta) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::uint64_t, RegistryEntry> entries_;
};

}  // namespace zks::zkp
