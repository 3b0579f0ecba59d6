// Operator command line: every step reads and writes files under one output
// directory so the steps compose.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"
#include "zks/audit/attacks.hpp"
#include "zks/audit/log.hpp"
#include "zks/calibrate/calibration.hpp"
#include "zks/calibrate/metrics.hpp"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/pipeline/artifacts.hpp"
#include "zks/pipeline/pipeline.hpp"
#include "zks/pipeline/report.hpp"
#include "zks/signal/augment.hpp"
#include "zks/signal/dataset_io.hpp"

namespace fs = std::filesystem;
using namespace zks;
using json = nlohmann::json;

namespace {

struct Config {
    std::uint64_t seed = 1;
    signal::DatasetSpec data;
    std::size_t n_train = 300;
    std::size_t n_calib = 150;
    std::string shift_kind = "jamming";
    double shift_intensity = 0.5;
    encoder::ModelConfig model;
    std::uint64_t model_seed = 1;
    std::size_t train_steps = 200;
    double lambda = 0.5;
    std::string site_id = "site-0";
    std::string target = "door-1";
    std::uint32_t flag_mask = 0x1;
    std::size_t batch = 1;
    std::optional<std::uint32_t> openings;
    std::size_t threads = 1;
    bool fixed_time = false;
    fs::path out = "out";
};

// Unknown keys are rejected so a typo cannot silently fall back to a default.
void load_config(Config& c, const fs::path& file) {
    const auto bytes = signal::read_file(file);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw FormatError("malformed config " + file.string() + ": " + e.what());
    }
    static const std::set<std::string> known = {"seed",      "dataset", "shift",   "model",     "lambda",
                                                "site_id",   "target",  "flag_mask", "batch",   "openings",
                                                "threads",   "fixed_time", "out"};
    for (const auto& [k, v] : j.items()) {
        if (!known.contains(k)) throw ParameterError("unknown config key '" + k + "'");
    }
    try {
        c.seed = j.value("seed", c.seed);
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            c.data = signal::spec_from_json(d);
            c.n_train = d.value("n_train", c.n_train);
            c.n_calib = d.value("n_calib", c.n_calib);
        }
        if (j.contains("shift")) {
            c.shift_kind = j.at("shift").value("kind", c.shift_kind);
            c.shift_intensity = j.at("shift").value("intensity", c.shift_intensity);
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            c.model.d0 = m.value("d0", c.model.d0);
            c.model.n_blocks = m.value("n_blocks", c.model.n_blocks);
            c.model.d_lat = m.value("d_lat", c.model.d_lat);
            c.model.w_t = m.value("w_t", c.model.w_t);
            c.model.group = m.value("group", c.model.group);
            c.model_seed = m.value("seed", c.model_seed);
            c.train_steps = m.value("train_steps", c.train_steps);
        }
        c.lambda = j.value("lambda", c.lambda);
        c.site_id = j.value("site_id", c.site_id);
        c.target = j.value("target", c.target);
        c.flag_mask = j.value("flag_mask", c.flag_mask);
        c.batch = j.value("batch", c.batch);
        if (j.contains("openings") && !j.at("openings").is_null()) c.openings = j.at("openings").get<std::uint32_t>();
        c.threads = j.value("threads", c.threads);
        c.fixed_time = j.value("fixed_time", c.fixed_time);
        if (j.contains("out")) c.out = j.at("out").get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError("bad config value: " + std::string(e.what()));
    }
}

Config default_config() {
    Config c;
    const auto ref = pipeline::ReferenceConfig::standard();
    c.data = ref.data;
    c.model = ref.model;
    return c;
}

// Output layout under --out.
fs::path data_dir(const Config& c) { return c.out / "data"; }
fs::path model_dir(const Config& c) { return c.out / "model"; }
fs::path registry_file(const Config& c) { return c.out / "registry.json"; }
fs::path run_dir(const Config& c) { return c.out / "run"; }
fs::path reports_dir(const Config& c) { return c.out / "reports"; }

fs::path key_file(const Config& c) {
    if (const char* env = std::getenv("ZKS_KEY_FILE")) return env;
    return c.out / "site.key";
}

void write_text(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    signal::write_file(p, std::vector<std::uint8_t>(s.begin(), s.end()));
}

std::string read_text(const fs::path& p) {
    const auto b = signal::read_file(p);
    return {b.begin(), b.end()};
}

std::vector<signal::Window> standardized(const std::vector<signal::Window>& ws, const signal::Stats& stats) {
    std::vector<signal::Window> out;
    out.reserve(ws.size());
    for (const auto& w : ws) out.push_back(signal::standardize(w, stats));
    return out;
}

audit::Signer load_or_create_key(const Config& c) {
    const auto path = key_file(c);
    if (fs::exists(path)) {
        auto hex = read_text(path);
        while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r')) hex.pop_back();
        return audit::Signer::from_hex(hex);
    }
    // Fresh key from the OS entropy source; the seed only drives data and proofs.
    std::random_device rd;
    const std::uint64_t k = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    const auto signer = audit::Signer::from_seed(k);
    write_text(path, signer.to_hex() + "\n");
    std::cerr << "created signing key " << path << "\n";
    return signer;
}

audit::Signer load_key(const Config& c) {
    const auto path = key_file(c);
    if (!fs::exists(path)) throw ParameterError("no signing key at " + path.string());
    auto hex = read_text(path);
    while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r')) hex.pop_back();
    return audit::Signer::from_hex(hex);
}

// --- generate ---------------------------------------------------------------

int cmd_generate(const Config& c) {
    auto spec = c.data;
    spec.seed = c.seed;
    if (c.n_train + c.n_calib >= spec.n_windows) throw ParameterError("train and calib leave no test windows");
    const auto all = signal::generate_dataset(spec);
    signal::DatasetBundle b;
    b.spec = spec;
    const auto t_end = all.begin() + static_cast<std::ptrdiff_t>(c.n_train);
    const auto c_end = t_end + static_cast<std::ptrdiff_t>(c.n_calib);
    b.splits["train"] = {all.begin(), t_end};
    b.splits["calib"] = {t_end, c_end};
    b.splits["test"] = {c_end, all.end()};
    const auto kind = signal::parse_perturb_kind(c.shift_kind);
    std::vector<signal::Window> shifted;
    for (const auto& w : b.splits["test"]) {
        shifted.push_back(signal::perturb(w, kind, c.shift_intensity, derive_seed(c.seed, 0x5348 + w.t_win())));
    }
    b.splits["shifted"] = std::move(shifted);
    b.stats = signal::compute_stats(b.splits["train"]);
    signal::save_dataset(data_dir(c), b);
    std::cout << "dataset: " << all.size() << " windows -> " << data_dir(c) << "\n";
    return 0;
}

// --- train-toy / quantize / calibrate ----------------------------------------

int cmd_train_toy(const Config& c) {
    const auto data = signal::load_dataset(data_dir(c));
    auto cfg = c.model;
    cfg.frames = data.spec.frames;
    cfg.subcarriers = data.spec.subcarriers;
    cfg.n_classes = data.spec.n_classes;
    const auto train = standardized(data.splits.at("train"), data.stats);
    auto m = encoder::FloatModel::random(cfg, c.model_seed);
    encoder::fit_affine(m, std::span(train).subspan(0, std::min<std::size_t>(32, train.size())));
    encoder::TrainConfig tc;
    tc.steps = c.train_steps;
    tc.seed = c.seed;
    const auto report = encoder::train_head(m, train, tc);
    const pipeline::ArtifactDir dir(model_dir(c));
    dir.write(pipeline::kFloatModelFile, pipeline::serialize_float_model(m));
    dir.write_text(pipeline::kStatsFile, signal::stats_to_json(data.stats).dump());
    std::cout << "trained: loss " << report.final_loss << ", train accuracy " << report.train_accuracy << "\n";
    return 0;
}

int cmd_quantize(const Config& c) {
    const auto data = signal::load_dataset(data_dir(c));
    const pipeline::ArtifactDir dir(model_dir(c));
    const auto m = pipeline::deserialize_float_model(dir.read(pipeline::kFloatModelFile));
    const auto calib = standardized(data.splits.at("calib"), data.stats);
    const auto qm = encoder::quantize_model(m, calib);
    dir.write(pipeline::kModelFile, qm.serialize());
    std::cout << "quantized: model hash " << qm.model_hash().to_hex() << ", argmax agreement "
              << qm.report.argmax_agreement << "\n";
    return 0;
}

int cmd_calibrate(const Config& c) {
    const auto data = signal::load_dataset(data_dir(c));
    const pipeline::ArtifactDir dir(model_dir(c));
    const auto qm = encoder::QuantizedModel::deserialize(dir.read(pipeline::kModelFile));
    const auto calib = standardized(data.splits.at("calib"), data.stats);
    const auto checksum = signal::checksum_hex(signal::encode_split(data.splits.at("calib")));
    const auto profile = pipeline::calibrate_model(qm, calib, checksum, c.lambda);
    dir.write_text(pipeline::kProfileFile, profile.to_json());
    if (!dir.has(pipeline::kTreeFile)) dir.write_text(pipeline::kTreeFile, pipeline::default_tree(qm.config.n_classes).to_json());

    // Coverage-risk curves on the held-out and shifted splits.
    const auto artifacts = pipeline::load_artifacts(dir);
    const pipeline::Device device(artifacts, {});
    std::vector<pipeline::CurveSeries> series;
    for (const auto* name : {"test", "shifted"}) {
        series.push_back(pipeline::grid_curve(name, pipeline::score_split(device, data.splits.at(name), c.threads)));
    }
    write_text(reports_dir(c) / "cr_curves.csv", pipeline::curves_csv(series));
    write_text(reports_dir(c) / "cr_curves.svg", pipeline::curves_svg(series));
    std::cout << "calibrated: T " << profile.temperature() << ", tau " << profile.tau_reg() << " (tau_q "
              << profile.tau_q() << ")\n";
    std::cout << "curves: " << reports_dir(c) / "cr_curves.svg" << "\n";
    return 0;
}

int cmd_register(const Config& c, const std::optional<std::string>& artifacts) {
    const fs::path dir = artifacts ? fs::path(*artifacts) : model_dir(c);
    const auto h = pipeline::register_artifacts(registry_file(c), dir);
    std::cout << "registered " << h.to_hex() << " from " << dir << "\n";
    return 0;
}

// --- commit / prove / run ----------------------------------------------------

json observation_json(const pipeline::Observation& o) {
    std::vector<int> latent(o.witness.latent.begin(), o.witness.latent.end());
    return {{"t_win", o.t_win},
            {"label", o.label},
            {"top", o.top},
            {"u_q", o.u_q},
            {"action", json::parse(o.action.to_json())},
            {"statement", json::parse(o.statement.to_json())},
            {"witness", {{"latent", latent}, {"flags", o.witness.flags}, {"r", o.witness.r.to_hex()}}}};
}

pipeline::Observation observation_from_json(const json& j) {
    pipeline::Observation o;
    o.t_win = j.at("t_win").get<std::uint64_t>();
    o.label = j.at("label").get<int>();
    o.top = j.at("top").get<std::size_t>();
    o.u_q = j.at("u_q").get<std::int32_t>();
    const auto& a = j.at("action");
    o.action.zone = a.at("zone").get<std::string>();
    o.action.target = a.at("target").get<std::string>();
    const auto d = policy::parse_decision(a.at("decision").get<std::string>());
    if (!d) throw FormatError("unknown decision in commit file");
    o.action.decision = *d;
    o.action.basis = a.at("basis").get<std::vector<std::string>>();
    o.action.confidence = a.at("confidence").get<double>();
    o.statement = zkp::Statement::from_json(j.at("statement").dump());
    for (int v : j.at("witness").at("latent").get<std::vector<int>>()) o.witness.latent.push_back(static_cast<std::int8_t>(v));
    o.witness.flags = j.at("witness").at("flags").get<std::uint32_t>();
    o.witness.r = zkp::Fp::from_hex(j.at("witness").at("r").get<std::string>());
    return o;
}

pipeline::Device make_device(const Config& c, const pipeline::Artifacts& a) {
    return pipeline::Device(a, {.site_id = c.site_id, .target = c.target, .flag_mask = c.flag_mask, .seed = c.seed});
}

// Proves consecutive batches, verifies, appends the audit log and writes
// proofs, statements and the summary under the run directory.
int prove_and_record(const Config& c, const pipeline::Device& device, const zkp::Registry& registry,
                     const std::vector<pipeline::Observation>& observations) {
    const auto dir = run_dir(c);
    fs::remove_all(dir / "proofs");
    fs::create_directories(dir / "proofs");
    const auto log_path = dir / "audit.jsonl";
    fs::remove(log_path);
    audit::AuditLog log(load_or_create_key(c), log_path);

    pipeline::RunSummary s;
    s.windows = observations.size();
    s.c4_per_window = device.circuit().c4_constraints();
    const auto n_batches = (observations.size() + c.batch - 1) / c.batch;
    std::vector<pipeline::BatchRecord> batches(n_batches);
    pipeline::parallel_for(n_batches, c.threads, [&](std::size_t b) {
        auto& rec = batches[b];
        std::vector<zkp::WitnessInput> inputs;
        for (std::size_t i = b * c.batch; i < std::min(observations.size(), (b + 1) * c.batch); ++i) {
            rec.statements.push_back(observations[i].statement);
            inputs.push_back(observations[i].witness);
        }
        const auto t0 = std::chrono::steady_clock::now();
        rec.proof = zkp::prove_batch(device.circuit(), rec.statements, inputs,
                                     {c.openings, derive_seed(c.seed, rec.statements.front().t_win)}, &rec.stats);
        rec.prove_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto bytes = zkp::serialize_proof(rec.statements, rec.proof);
        rec.bytes = bytes.size();
        rec.verdict = zkp::verify_registered(registry, rec.statements, rec.proof);
        const auto stem = "batch-" + std::to_string(rec.statements.front().t_win);
        signal::write_file(dir / "proofs" / (stem + ".zkpf"), bytes);
        json st = json::array();
        for (const auto& x : rec.statements) st.push_back(json::parse(x.to_json()));
        write_text(dir / "proofs" / (stem + ".statements.json"), st.dump(2) + "\n");
    });

    std::size_t idx = 0;
    for (const auto& rec : batches) {
        for (std::size_t j = 0; j < rec.statements.size(); ++j, ++idx) {
            const auto& o = observations[idx];
            const auto ts = c.fixed_time ? static_cast<std::int64_t>(o.t_win) * 1000
                                         : std::chrono::duration_cast<std::chrono::milliseconds>(
                                               std::chrono::system_clock::now().time_since_epoch())
                                               .count();
            log.append(pipeline::audit_fields(o, c.site_id, ts, rec.bytes));
            if (o.statement.abstains()) {
                ++s.abstained;
            } else {
                ++s.decided;
                if (static_cast<int>(o.top) == o.label) ++s.decided_correct;
            }
            if (rec.verdict.accepted) ++s.accepted_windows;
        }
        ++s.batches;
        if (rec.verdict.accepted) ++s.accepted_batches;
        s.c4_instances += rec.stats.c4_instances;
        s.constraint_instances += rec.stats.constraint_instances;
        s.prove_seconds += rec.prove_seconds;
        s.proof_bytes += rec.bytes;
        if (!rec.verdict.accepted) {
            std::cout << "REJECT batch " << rec.statements.front().t_win << ": " << zkp::to_string(rec.verdict.reason)
                      << "\n";
        }
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, s.windows));
    s.coverage = static_cast<double>(s.decided) / n;
    s.abstain_rate = static_cast<double>(s.abstained) / n;
    s.risk = s.decided ? 1.0 - static_cast<double>(s.decided_correct) / static_cast<double>(s.decided) : 0.0;
    s.acceptance_rate = static_cast<double>(s.accepted_windows) / n;
    s.amortized = {s.prove_seconds / n, static_cast<double>(s.proof_bytes) / n};
    write_text(dir / "summary.json", s.to_json() + "\n");
    const auto anchor = log.anchor();
    write_text(dir / "anchor.json", json{{"count", anchor.count}, {"head", anchor.head.to_hex()}}.dump() + "\n");
    std::cout << "windows " << s.windows << ", decided " << s.decided << ", abstained " << s.abstained
              << ", accepted " << s.accepted_windows << "/" << s.windows << ", bytes/window "
              << s.amortized.bytes_per_window << "\n";
    return 0;
}

struct Loaded {
    pipeline::Artifacts artifacts;
    zkp::Registry registry;
};

// Refuses to go further when the model has no registry entry.
Loaded load_registered(const Config& c) {
    auto a = pipeline::load_artifacts(pipeline::ArtifactDir(model_dir(c)));
    auto reg = pipeline::load_registry(registry_file(c));
    if (!reg.find(a.model.model_hash())) {
        throw RegistryError("unregistered model " + a.model.model_hash().to_hex() + "; run 'zks register' first");
    }
    return {std::move(a), std::move(reg)};
}

std::vector<signal::Window> load_split(const Config& c, const std::string& split, std::size_t limit) {
    auto data = signal::load_dataset(data_dir(c));
    if (!data.splits.contains(split)) throw ParameterError("dataset has no split '" + split + "'");
    auto ws = std::move(data.splits.at(split));
    if (limit > 0 && ws.size() > limit) ws.erase(ws.begin() + static_cast<std::ptrdiff_t>(limit), ws.end());
    return ws;
}

int cmd_commit(const Config& c, const std::string& split, std::size_t limit) {
    const auto [a, reg] = load_registered(c);
    const auto device = make_device(c, a);
    const auto windows = load_split(c, split, limit);
    std::vector<pipeline::Observation> obs(windows.size());
    pipeline::parallel_for(windows.size(), c.threads, [&](std::size_t i) { obs[i] = device.observe(windows[i]); });
    std::string out;
    for (const auto& o : obs) out += observation_json(o).dump() + "\n";
    write_text(run_dir(c) / "commits.jsonl", out);
    std::cout << "committed " << obs.size() << " windows -> " << run_dir(c) / "commits.jsonl" << "\n";
    return 0;
}

int cmd_prove(const Config& c) {
    const auto [a, reg] = load_registered(c);
    const auto device = make_device(c, a);
    std::vector<pipeline::Observation> obs;
    for (const auto& line : audit::split_lines(read_text(run_dir(c) / "commits.jsonl"))) {
        try {
            obs.push_back(observation_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw FormatError("malformed commit line: " + std::string(e.what()));
        }
    }
    return prove_and_record(c, device, reg, obs);
}

int cmd_run(const Config& c, const std::string& split, std::size_t limit) {
    const auto [a, reg] = load_registered(c);
    const auto device = make_device(c, a);
    const auto windows = load_split(c, split, limit);
    std::vector<pipeline::Observation> obs(windows.size());
    pipeline::parallel_for(windows.size(), c.threads, [&](std::size_t i) { obs[i] = device.observe(windows[i]); });
    return prove_and_record(c, device, reg, obs);
}

// --- verify / audit-verify / attack -----------------------------------------

int cmd_verify(const Config& c, const std::string& proof_path, const std::optional<std::string>& statements_path) {
    const auto reg = pipeline::load_registry(registry_file(c));
    auto bundle = zkp::parse_proof(signal::read_file(proof_path));
    if (statements_path) {
        const auto j = json::parse(read_text(*statements_path));
        bundle.statements.clear();
        for (const auto& s : j) bundle.statements.push_back(zkp::Statement::from_json(s.dump()));
    }
    const auto v = zkp::verify_registered(reg, bundle.statements, bundle.proof);
    if (v.accepted) {
        std::cout << "ACCEPT" << (v.insecure ? " (insecure: openings below the default)" : "") << "\n";
    } else {
        std::cout << "REJECT " << zkp::to_string(v.reason) << (v.detail.empty() ? "" : ": " + v.detail) << "\n";
    }
    return 0;
}

int cmd_audit_verify(const Config& c, const std::optional<std::string>& log_arg) {
    const fs::path log_path = log_arg ? fs::path(*log_arg) : run_dir(c) / "audit.jsonl";
    const auto signer = load_key(c);
    std::optional<audit::Anchor> anchor;
    const auto anchor_path = log_path.parent_path() / "anchor.json";
    if (fs::exists(anchor_path)) {
        const auto j = json::parse(read_text(anchor_path));
        anchor = audit::Anchor{j.at("count").get<std::size_t>(), zkp::Fp::from_hex(j.at("head").get<std::string>())};
    }
    const auto text = read_text(log_path);
    const auto check = audit::verify_log_text(text, signer, anchor);
    if (!check.ok) {
        std::cout << "TAMPERED at entry " << *check.first_bad << ": " << check.reason << "\n";
        return 0;
    }
    const auto lines = audit::split_lines(text);
    const auto s = pipeline::summarize_log(lines);
    std::cout << "OK " << lines.size() << " entries" << (anchor ? ", anchor matches" : ", no anchor") << "\n";
    std::cout << "coverage " << s.coverage << ", abstain rate " << s.abstain_rate << "\n";

    // Acceptance is recomputed by re-verifying the archived proofs.
    const auto proofs = log_path.parent_path() / "proofs";
    if (fs::exists(proofs)) {
        const auto reg = pipeline::load_registry(registry_file(c));
        std::size_t windows = 0, accepted = 0;
        for (const auto& entry : fs::directory_iterator(proofs)) {
            if (entry.path().extension() != ".zkpf") continue;
            const auto b = zkp::parse_proof(signal::read_file(entry.path()));
            windows += b.statements.size();
            if (zkp::verify_registered(reg, b.statements, b.proof).accepted) accepted += b.statements.size();
        }
        std::cout << "proof acceptance " << accepted << "/" << windows << "\n";
    }
    return 0;
}

int cmd_attack(const Config& c, const std::string& kind, std::size_t trials, const std::optional<std::string>& old_dir) {
    const auto [a, reg] = load_registered(c);
    const auto windows = load_split(c, "test", 0);
    audit::CampaignTally tally;
    Rng rng(derive_seed(c.seed, 0x61747461636b));
    json outcomes = json::array();
    auto record = [&](const audit::AttackOutcome& o) {
        tally.add(o);
        outcomes.push_back({{"attempted", o.attempted}, {"accepted", o.accepted}, {"reason", zkp::to_string(o.reason)}});
    };
    if (kind == "replay") {
        const auto proofs = run_dir(c) / "proofs";
        std::vector<zkp::ProofBundle> archive;
        if (fs::exists(proofs)) {
            for (const auto& e : fs::directory_iterator(proofs)) {
                if (e.path().extension() == ".zkpf") archive.push_back(zkp::parse_proof(signal::read_file(e.path())));
            }
        }
        if (archive.empty()) throw ParameterError("replay needs an archived honest run; run 'zks run' first");
        for (std::size_t t = 0; t < trials; ++t) {
            const auto& past = archive[rng.below(archive.size())];
            const auto fresh = past.statements.back().t_win + 1 + rng.below(1u << 20);
            record(audit::attack_replay(reg, past, fresh, rng.next_u64()));
        }
    } else if (kind == "tamper") {
        const auto tau_q = a.profile.tau_q();
        if (tau_q == 0) throw ParameterError("registered threshold is already 0; nothing to lower");
        for (std::size_t t = 0; t < trials; ++t) {
            const auto lowered = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(tau_q)));
            record(audit::attack_tamper_threshold(a, reg, windows[rng.below(windows.size())], lowered, rng.next_u64()));
        }
    } else if (kind == "rollback") {
        if (!old_dir) throw ParameterError("rollback needs --old <artifact dir>");
        const auto old = pipeline::load_artifacts(pipeline::ArtifactDir(*old_dir));
        for (std::size_t t = 0; t < trials; ++t) {
            record(audit::attack_rollback(old, reg, windows[rng.below(windows.size())], rng.next_u64()));
        }
    } else {
        throw ParameterError("unknown attack '" + kind + "' (replay, tamper, rollback)");
    }
    write_text(reports_dir(c) / ("attack-" + kind + ".json"), outcomes.dump(1) + "\n");
    for (const auto& [reason, count] : tally.reasons) {
        std::cout << (reason == "none" ? "ACCEPT" : "REJECT " + reason) << " x" << count << "\n";
    }
    std::cout << kind << ": " << tally.trials << " trials, " << tally.accepted << " accepted\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verifiable selective inference over synthetic CSI: data, model, proofs and audit."};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> batch;
    std::optional<std::uint32_t> openings;
    std::optional<std::size_t> threads;
    std::optional<std::string> out;
    bool fixed_time = false;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--batch", batch, "Windows per proof (B)")->check(CLI::PositiveNumber);
    app.add_option("--openings", openings, "Spot-check openings per proof (k)");
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Output directory");
    app.add_flag("--fixed-time", fixed_time, "Audit timestamps from t_win instead of the wall clock");

    std::string split = "test";
    std::size_t limit = 0;
    std::string proof_path;
    std::optional<std::string> statements_path, artifacts_path, log_path, old_dir;
    std::string attack_kind;
    std::size_t trials = 1;

    auto* gen = app.add_subcommand("generate", "Synthesize the dataset and its shifted split");
    auto* train = app.add_subcommand("train-toy", "Train the float reference model");
    auto* quant = app.add_subcommand("quantize", "Quantize the float model to integers");
    auto* calib = app.add_subcommand("calibrate", "Fit T, select tau and emit coverage-risk curves");
    auto* reg = app.add_subcommand("register", "Register model, profile and policy");
    reg->add_option("--artifacts", artifacts_path, "Artifact directory (default <out>/model)");
    auto* run = app.add_subcommand("run", "Observe, decide, prove, verify and audit every window");
    auto* commit = app.add_subcommand("commit", "Device half of run: observe and commit");
    auto* prove = app.add_subcommand("prove", "Gateway half of run: prove, verify and audit the commits");
    for (auto* sc : {run, commit}) {
        sc->add_option("--split", split, "Dataset split");
        sc->add_option("--limit", limit, "Use at most this many windows (0 = all)");
    }
    auto* verify = app.add_subcommand("verify", "Verify an exported proof");
    verify->add_option("proof", proof_path, "Proof file (.zkpf)")->required()->check(CLI::ExistingFile);
    verify->add_option("--statements", statements_path, "Statements JSON replacing the embedded ones");
    auto* audit_verify = app.add_subcommand("audit-verify", "Check the audit chain and recompute its summary");
    audit_verify->add_option("--log", log_path, "Audit log (default <out>/run/audit.jsonl)");
    auto* attack = app.add_subcommand("attack", "Red-team campaign against the verifier");
    attack->add_option("kind", attack_kind, "replay, tamper or rollback")->required();
    attack->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
    attack->add_option("--old", old_dir, "Artifacts of the superseded model (rollback)");

    CLI11_PARSE(app, argc, argv);

    try {
        auto c = default_config();
        if (!config_path.empty()) load_config(c, config_path);
        if (seed) c.seed = *seed;
        if (batch) c.batch = *batch;
        if (openings) c.openings = *openings;
        if (threads) c.threads = *threads;
        if (out) c.out = *out;
        if (fixed_time) c.fixed_time = true;

        if (gen->parsed()) return cmd_generate(c);
        if (train->parsed()) return cmd_train_toy(c);
        if (quant->parsed()) return cmd_quantize(c);
        if (calib->parsed()) return cmd_calibrate(c);
        if (reg->parsed()) return cmd_register(c, artifacts_path);
        if (run->parsed()) return cmd_run(c, split, limit);
        if (commit->parsed()) return cmd_commit(c, split, limit);
        if (prove->parsed()) return cmd_prove(c);
        if (verify->parsed()) return cmd_verify(c, proof_path, statements_path);
        if (audit_verify->parsed()) return cmd_audit_verify(c, log_path);
        if (attack->parsed()) return cmd_attack(c, attack_kind, trials, old_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
