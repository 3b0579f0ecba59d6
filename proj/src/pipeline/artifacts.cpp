#include "zks/pipeline/artifacts.hpp"

#include <functional>

#include "json.hpp"
#include "zks/common/bytes.hpp"
#include "zks/common/errors.hpp"
#include "zks/signal/dataset_io.hpp"

namespace zks::pipeline {
namespace {

using encoder::FloatModel;

constexpr const char* kManifest = "manifest.json";

// Every parameter vector in a fixed order; shapes come from the config.
void for_each_tensor(FloatModel& m, const std::function<void(std::vector<double>&)>& f) {
    auto linear = [&](encoder::Linear& l) {
        f(l.w.data);
        f(l.b);
    };
    auto affine = [&](encoder::Affine& a) {
        f(a.gamma);
        f(a.beta);
    };
    auto attention = [&](encoder::AttentionWeights& a) {
        linear(a.q);
        linear(a.k);
        linear(a.v);
        linear(a.o);
    };
    linear(m.stem);
    f(m.dw_kernel);
    f(m.dw_bias);
    for (auto& b : m.blocks) {
        affine(b.norm_t);
        attention(b.temporal);
        affine(b.norm_s);
        attention(b.spectral);
        affine(b.norm_f);
        linear(b.ffn_gate);
        linear(b.ffn_up);
        linear(b.ffn_down);
    }
    linear(m.latent);
    linear(m.head);
    linear(m.abstain);
}

nlohmann::json read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / kManifest;
    if (!std::filesystem::exists(path)) return nlohmann::json::object();
    const auto bytes = signal::read_file(path);
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed manifest in " + dir.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> text_bytes(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

std::vector<std::uint8_t> serialize_float_model(const FloatModel& m) {
    ByteWriter w;
    w.tag("ZKFM");
    const auto& c = m.config;
    for (auto v : {c.frames, c.subcarriers, c.d0, c.n_blocks, c.d_lat, c.w_t, c.group, c.n_classes}) w.u64(v);
    auto copy = m;
    for_each_tensor(copy, [&](std::vector<double>& t) {
        w.u64(t.size());
        for (double x : t) w.f64(x);
    });
    return w.take();
}

FloatModel deserialize_float_model(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("ZKFM");
    encoder::ModelConfig c;
    for (auto* v : {&c.frames, &c.subcarriers, &c.d0, &c.n_blocks, &c.d_lat, &c.w_t, &c.group, &c.n_classes}) {
        *v = r.u64();
    }
    try {
        c.validate();
    } catch (const ParameterError& e) {
        throw FormatError(std::string("float model config: ") + e.what());
    }
    auto m = FloatModel::random(c, 0);
    for_each_tensor(m, [&](std::vector<double>& t) {
        if (r.u64() != t.size()) throw FormatError("float model tensor shape mismatch");
        for (double& x : t) x = r.f64();
    });
    r.expect_end();
    return m;
}

void ArtifactDir::write(const std::string& name, const std::vector<std::uint8_t>& bytes) const {
    std::filesystem::create_directories(dir_);
    signal::write_file(dir_ / name, bytes);
    auto manifest = read_manifest(dir_);
    manifest[name] = signal::checksum_hex(bytes);
    signal::write_file(dir_ / kManifest, text_bytes(manifest.dump(2) + "\n"));
}

void ArtifactDir::write_text(const std::string& name, const std::string& text) const { write(name, text_bytes(text)); }

std::vector<std::uint8_t> ArtifactDir::read(const std::string& name) const {
    const auto manifest = read_manifest(dir_);
    if (!manifest.contains(name)) throw FormatError(name + " is not listed in " + (dir_ / kManifest).string());
    auto bytes = signal::read_file(dir_ / name);
    if (signal::checksum_hex(bytes) != manifest.at(name).get<std::string>()) {
        throw FormatError("checksum mismatch for " + (dir_ / name).string());
    }
    return bytes;
}

std::string ArtifactDir::read_text(const std::string& name) const {
    const auto bytes = read(name);
    return {bytes.begin(), bytes.end()};
}

bool ArtifactDir::has(const std::string& name) const { return read_manifest(dir_).contains(name); }

void save_artifacts(const ArtifactDir& dir, const Artifacts& a) {
    dir.write(kModelFile, a.model.serialize());
    dir.write_text(kProfileFile, a.profile.to_json());
    dir.write_text(kTreeFile, a.tree.to_json());
    dir.write_text(kStatsFile, signal::stats_to_json(a.stats).dump());
}

Artifacts load_artifacts(const ArtifactDir& dir) {
    auto model = encoder::QuantizedModel::deserialize(dir.read(kModelFile));
    auto profile = calibrate::CalibrationProfile::from_json(dir.read_text(kProfileFile));
    auto tree = policy::PolicyTree::from_json(dir.read_text(kTreeFile), model.config.n_classes);
    nlohmann::json stats;
    try {
        stats = nlohmann::json::parse(dir.read_text(kStatsFile));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed stats: ") + e.what());
    }
    return Artifacts{std::move(model), std::move(profile), std::move(tree), signal::stats_from_json(stats)};
}

namespace {

nlohmann::json read_registry_file(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) return nlohmann::json::array();
    const auto bytes = signal::read_file(file);
    try {
        auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
        if (!j.is_array()) throw FormatError("registry file must hold a JSON array");
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed registry file: " + std::string(e.what()));
    }
}

}  // namespace

zkp::Fp register_artifacts(const std::filesystem::path& registry_file, const std::filesystem::path& artifact_dir) {
    auto listed = read_registry_file(registry_file);
    auto registry = load_registry(registry_file);
    const auto a = load_artifacts(ArtifactDir(artifact_dir));
    const auto before = registry.size();
    const auto& e = registry.register_model(a.model, a.profile, a.tree);
    if (registry.size() > before) {
        listed.push_back({{"dir", std::filesystem::absolute(artifact_dir).string()},
                          {"h_theta", e.h_theta.to_hex()},
                          {"entry", nlohmann::json::parse(e.to_json())}});
        if (registry_file.has_parent_path()) std::filesystem::create_directories(registry_file.parent_path());
        signal::write_file(registry_file, text_bytes(listed.dump(2) + "\n"));
    }
    return e.h_theta;
}

zkp::Registry load_registry(const std::filesystem::path& registry_file) {
    zkp::Registry registry;
    for (const auto& item : read_registry_file(registry_file)) {
        std::string dir, recorded;
        try {
            dir = item.at("dir").get<std::string>();
            recorded = item.at("h_theta").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("malformed registry item: " + std::string(e.what()));
        }
        const auto a = load_artifacts(ArtifactDir(dir));
        const auto& e = registry.register_model(a.model, a.profile, a.tree);
        if (e.h_theta.to_hex() != recorded) {
            throw RegistryError("artifacts in " + dir + " no longer match their registered hash");
        }
    }
    return registry;
}

}  // namespace zks::pipeline
