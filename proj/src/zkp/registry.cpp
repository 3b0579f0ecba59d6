#include "zks/zkp/registry.hpp"

#include "json.hpp"
#include "zks/common/errors.hpp"

namespace zks::zkp {

std::string RegistryEntry::to_json() const {
    nlohmann::json j;
    j["h_theta"] = h_theta.to_hex();
    j["backbone_hash"] = backbone_hash.to_hex();
    j["head_hash"] = head_hash.to_hex();
    j["tau_q"] = tau_q;
    j["tree_hash"] = tree_hash.to_hex();
    j["profile_digest"] = profile_digest.to_hex();
    return j.dump();
}

const RegistryEntry& Registry::register_model(const encoder::QuantizedModel& qm,
                                              const calibrate::CalibrationProfile& profile,
                                              const policy::PolicyTree& tree) {
    const Fp h = qm.model_hash();
    if (profile.model_hash() != h) throw RegistryError("calibration profile belongs to another model");
    if (const auto* existing = find(h)) {
        if (existing->tau_q != profile.tau_q() || existing->tree_hash != tree.hash() ||
            existing->profile_digest != profile.digest()) {
            throw RegistryError("model already registered with a different operating point");
        }
        return *existing;
    }
    RegistryEntry e;
    e.h_theta = h;
    e.backbone_hash = qm.backbone_hash();
    e.head_hash = qm.head_hash();
    e.tau_q = profile.tau_q();
    e.tree_hash = tree.hash();
    e.profile_digest = profile.digest();
    e.circuit = std::make_shared<const Circuit>(Circuit::from_model(qm, profile, tree));
    return entries_.emplace(h.value(), std::move(e)).first->second;
}

const RegistryEntry* Registry::find(Fp h_theta) const {
    const auto it = entries_.find(h_theta.value());
    return it == entries_.end() ? nullptr : &it->second;
}

const RegistryEntry& Registry::at(Fp h_theta) const {
    const auto* e = find(h_theta);
    if (!e) throw RegistryError("unknown model hash " + h_theta.to_hex());
    return *e;
}

}  // namespace zks::zkp
