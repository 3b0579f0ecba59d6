#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "zks/encoder/float_model.hpp"
#include "zks/pipeline/pipeline.hpp"
#include "zks/zkp/registry.hpp"

namespace zks::pipeline {

std::vector<std::uint8_t> serialize_float_model(const encoder::FloatModel& m);
/// Throws FormatError on bad magic, truncation or shape mismatch.
encoder::FloatModel deserialize_float_model(std::span<const std::uint8_t> bytes);

/// A directory whose files are listed in manifest.json with a checksum
/// each. Reads fail unless the file is listed and its bytes match.
class ArtifactDir {
public:
    explicit ArtifactDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::vector<std::uint8_t>& bytes) const;
    void write_text(const std::string& name, const std::string& text) const;
    /// Throws FormatError when unlisted, missing or corrupted.
    std::vector<std::uint8_t> read(const std::string& name) const;
    std::string read_text(const std::string& name) const;
    bool has(const std::string& name) const;

    const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
};

inline constexpr const char* kFloatModelFile = "float_model.bin";
inline constexpr const char* kModelFile = "model.bin";
inline constexpr const char* kProfileFile = "profile.json";
inline constexpr const char* kTreeFile = "tree.json";
inline constexpr const char* kStatsFile = "stats.json";

void save_artifacts(const ArtifactDir& dir, const Artifacts& a);
Artifacts load_artifacts(const ArtifactDir& dir);

/// JSON list of registered artifact directories with their model hashes.
/// Appends, after checking the artifacts register cleanly next to the ones
/// already listed; returns the new entry's model hash.
zkp::Fp register_artifacts(const std::filesystem::path& registry_file, const std::filesystem::path& artifact_dir);

/// Rebuilds the registry from its file. Throws RegistryError when a listed
/// directory no longer hashes to its recorded model hash.
zkp::Registry load_registry(const std::filesystem::path& registry_file);

}  // namespace zks::pipeline
