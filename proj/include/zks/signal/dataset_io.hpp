#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "zks/signal/dataset.hpp"
#include "zks/signal/window.hpp"

namespace zks::signal {

/// Split file layout: 16-byte header (magic "ZKS1", u32 T, u32 S, u32 count),
/// then count windows of little-endian float32 in row-major T x S x 2.
inline constexpr char kSplitMagic[4] = {'Z', 'K', 'S', '1'};

std::vector<std::uint8_t> encode_split(const std::vector<Window>& windows);
/// Window metadata is not part of the binary; defaults are filled in.
std::vector<Window> decode_split(const std::vector<std::uint8_t>& bytes);

nlohmann::json stats_to_json(const Stats& stats);
Stats stats_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const DatasetSpec& spec);
DatasetSpec spec_from_json(const nlohmann::json& j);

struct DatasetBundle {
    DatasetSpec spec;
    Stats stats;
    std::map<std::string, std::vector<Window>> splits;
};

/// Writes <dir>/manifest.json plus one <split>.bin per split. The manifest
/// carries spec, stats, per-window metadata and a checksum per split file.
void save_dataset(const std::filesystem::path& dir, const DatasetBundle& bundle);
/// Throws FormatError on checksum mismatch or malformed files.
DatasetBundle load_dataset(const std::filesystem::path& dir);

std::string checksum_hex(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace zks::signal
