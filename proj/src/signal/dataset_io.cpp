#include "zks/signal/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "zks/common/errors.hpp"
#include "zks/zkp/sponge.hpp"

namespace zks::signal {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_split(const std::vector<Window>& windows) {
    std::vector<std::uint8_t> out(kSplitMagic, kSplitMagic + 4);
    const std::uint32_t T = windows.empty() ? 0 : static_cast<std::uint32_t>(windows.front().frames());
    const std::uint32_t S = windows.empty() ? 0 : static_cast<std::uint32_t>(windows.front().subcarriers());
    put_u32(out, T);
    put_u32(out, S);
    put_u32(out, static_cast<std::uint32_t>(windows.size()));
    for (const auto& w : windows) {
        if (w.frames() != T || w.subcarriers() != S) throw ParameterError("split windows must share one shape");
        for (double v : w.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

std::vector<Window> decode_split(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kSplitMagic, 4) != 0) throw FormatError("not a ZKS1 split file");
    const std::size_t T = get_u32(bytes, 4), S = get_u32(bytes, 8), count = get_u32(bytes, 12);
    const std::size_t per = T * S * 2;
    if (bytes.size() != 16 + count * per * 4) throw FormatError("split file size does not match its header");
    std::vector<Window> out;
    out.reserve(count);
    std::size_t pos = 16;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> data(per);
        for (auto& v : data) {
            v = static_cast<double>(std::bit_cast<float>(get_u32(bytes, pos)));
            pos += 4;
        }
        out.emplace_back(T, S, std::move(data));
    }
    return out;
}

nlohmann::json stats_to_json(const Stats& stats) {
    return {{"subcarriers", stats.subcarriers}, {"mean", stats.mean}, {"std", stats.stddev}};
}

Stats stats_from_json(const nlohmann::json& j) {
    Stats s;
    s.subcarriers = j.at("subcarriers").get<std::size_t>();
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("std").get<std::vector<double>>();
    if (s.mean.size() != s.subcarriers * 2 || s.stddev.size() != s.subcarriers * 2) {
        throw FormatError("stats arrays do not match subcarrier count");
    }
    return s;
}

nlohmann::json spec_to_json(const DatasetSpec& spec) {
    nlohmann::json j = {{"seed", spec.seed},          {"n_windows", spec.n_windows}, {"frames", spec.frames},
                        {"subcarriers", spec.subcarriers}, {"n_classes", spec.n_classes}, {"n_paths", spec.n_paths}};
    if (std::isfinite(spec.snr_db)) {
        j["snr_db"] = spec.snr_db;
    } else {
        j["snr_db"] = "inf";
    }
    return j;
}

DatasetSpec spec_from_json(const nlohmann::json& j) {
    DatasetSpec spec;
    spec.seed = j.value("seed", spec.seed);
    spec.n_windows = j.value("n_windows", spec.n_windows);
    spec.frames = j.value("frames", spec.frames);
    spec.subcarriers = j.value("subcarriers", spec.subcarriers);
    spec.n_classes = j.value("n_classes", spec.n_classes);
    spec.n_paths = j.value("n_paths", spec.n_paths);
    if (j.contains("snr_db")) {
        const auto& snr = j.at("snr_db");
        spec.snr_db = snr.is_string() ? kNoiseless : snr.get<double>();
    }
    return spec;
}

std::string checksum_hex(const std::vector<std::uint8_t>& bytes) {
    return zkp::hash_bytes(bytes).to_hex();
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("cannot write " + path.string());
}

void save_dataset(const std::filesystem::path& dir, const DatasetBundle& bundle) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "ZKS1";
    manifest["spec"] = spec_to_json(bundle.spec);
    manifest["stats"] = stats_to_json(bundle.stats);
    for (const auto& [name, windows] : bundle.splits) {
        const auto bytes = encode_split(windows);
        const std::string file = name + ".bin";
        write_file(dir / file, bytes);
        nlohmann::json split;
        split["file"] = file;
        split["count"] = windows.size();
        split["checksum"] = checksum_hex(bytes);
        std::vector<std::uint64_t> t_win;
        std::vector<std::string> zones;
        std::vector<int> labels;
        for (const auto& w : windows) {
            t_win.push_back(w.t_win());
            zones.push_back(w.zone());
            labels.push_back(w.label());
        }
        split["t_win"] = t_win;
        split["zone"] = zones;
        split["label"] = labels;
        manifest["splits"][name] = split;
    }
    const std::string text = manifest.dump(2) + "\n";
    write_file(dir / "manifest.json", std::vector<std::uint8_t>(text.begin(), text.end()));
}

DatasetBundle load_dataset(const std::filesystem::path& dir) {
    const auto text = read_file(dir / "manifest.json");
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
    DatasetBundle bundle;
    bundle.spec = spec_from_json(manifest.at("spec"));
    bundle.stats = stats_from_json(manifest.at("stats"));
    for (const auto& [name, split] : manifest.at("splits").items()) {
        const auto bytes = read_file(dir / split.at("file").get<std::string>());
        if (checksum_hex(bytes) != split.at("checksum").get<std::string>()) {
            throw FormatError("checksum mismatch for split " + name);
        }
        auto raw = decode_split(bytes);
        const auto t_win = split.at("t_win").get<std::vector<std::uint64_t>>();
        const auto zones = split.at("zone").get<std::vector<std::string>>();
        const auto labels = split.at("label").get<std::vector<int>>();
        if (t_win.size() != raw.size() || zones.size() != raw.size() || labels.size() != raw.size()) {
            throw FormatError("split metadata length mismatch for " + name);
        }
        std::vector<Window> windows;
        windows.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            windows.emplace_back(raw[i].frames(), raw[i].subcarriers(),
                                 std::vector<double>(raw[i].data().begin(), raw[i].data().end()), t_win[i], zones[i],
                                 labels[i]);
        }
        bundle.splits.emplace(name, std::move(windows));
    }
    return bundle;
}

}  // namespace zks::signal
