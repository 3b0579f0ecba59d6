#include <atomic>
#include <filesystem>

#include "doctest.h"
#include "zks/audit/attacks.hpp"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/pipeline/artifacts.hpp"
#include "zks/pipeline/pipeline.hpp"
#include "zks/signal/dataset_io.hpp"

using namespace zks;
using namespace zks::pipeline;

namespace {

ReferenceConfig small_config(std::uint64_t model_seed = 1) {
    auto c = ReferenceConfig::standard();
    c.data.subcarriers = 8;
    c.data.n_windows = 260;
    c.n_train = 150;
    c.n_calib = 60;
    c.model.subcarriers = 8;
    c.model.d0 = 8;
    c.model.n_blocks = 1;
    c.model.d_lat = 16;
    c.model.group = 4;
    c.model_seed = model_seed;
    c.train.steps = 120;
    return c;
}

const TrainedReference& reference() {
    static const TrainedReference ref = train_reference(small_config());
    return ref;
}

const TrainedReference& older_reference() {
    static const TrainedReference ref = train_reference(small_config(2));
    return ref;
}

zkp::Registry registry_for(const Artifacts& a) {
    zkp::Registry r;
    r.register_model(a.model, a.profile, a.tree);
    return r;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::span<const signal::Window> first(std::size_t n) { return std::span(reference().test).subspan(0, n); }

}  // namespace

TEST_CASE("reference training yields a registrable operating point") {
    const auto& a = reference().artifacts;
    CHECK(a.profile.model_hash() == a.model.model_hash());
    const double scaled = a.profile.tau_reg() * 128.0;
    CHECK(scaled == doctest::Approx(std::round(scaled)));
    CHECK(a.profile.temperature() > 0.0);
    CHECK(a.tree.n_classes() == 5);
    CHECK_NOTHROW(registry_for(a));
}

TEST_CASE("device observations are deterministic and self-consistent") {
    const auto& a = reference().artifacts;
    const Device dev(a, {});
    for (const auto& w : first(20)) {
        const auto o = dev.observe(w);
        const auto again = dev.observe(w);
        CHECK(o.statement == again.statement);
        CHECK(o.statement.c == zkp::commit_latent(o.witness.latent, o.witness.r, o.witness.flags));
        CHECK(o.statement.action == o.action.decision);
        CHECK(o.statement.tau_q == a.profile.tau_q());
        CHECK(o.statement.t_win == w.t_win());
        CHECK(policy::validate_action(o.action));
        if (o.u_q < a.profile.tau_q()) CHECK(o.statement.abstains());
        CHECK((o.witness.flags & ~1u) == 0);
    }
    const Device other(a, {.seed = 2});
    CHECK(other.observe(reference().test[0]).statement.nonce != dev.observe(reference().test[0]).statement.nonce);
}

TEST_CASE("honest run verifies and its log matches the summary") {
    const auto& a = reference().artifacts;
    const auto reg = registry_for(a);
    const Device dev(a, {});
    audit::AuditLog log(audit::Signer::from_seed(5));
    const auto r = run(dev, reg, first(24), {}, &log);
    const auto& s = r.summary;
    CHECK(s.windows == 24);
    CHECK(s.acceptance_rate == 1.0);
    CHECK(s.accepted_batches == 24);
    CHECK(s.decided + s.abstained == 24);
    CHECK(s.c4_instances == s.decided * s.c4_per_window);
    CHECK(log.size() == 24);
    CHECK(audit::verify_chain(log.lines(), audit::Signer::from_seed(5), log.anchor()).ok);
    const auto ls = summarize_log(log.lines());
    CHECK(ls.coverage == s.coverage);
    CHECK(ls.abstain_rate == s.abstain_rate);
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(log.entries()[i].fields.t_win == r.observations[i].t_win);
        CHECK(log.entries()[i].fields.pi_size == r.batches[i].bytes);
        CHECK(log.entries()[i].fields.ts == static_cast<std::int64_t>(r.observations[i].t_win) * 1000);
    }
}

TEST_CASE("batching changes only proof packaging") {
    const auto& a = reference().artifacts;
    const auto reg = registry_for(a);
    const Device dev(a, {});
    audit::AuditLog l1(audit::Signer::from_seed(1)), l8(audit::Signer::from_seed(1));
    const auto r1 = run(dev, reg, first(32), {.batch = 1}, &l1);
    const auto r8 = run(dev, reg, first(32), {.batch = 8}, &l8);
    REQUIRE(r8.batches.size() == 4);
    CHECK(r8.summary.acceptance_rate == 1.0);
    CHECK(r8.summary.c4_instances == r1.summary.c4_instances);
    CHECK(r8.summary.amortized.bytes_per_window < r1.summary.amortized.bytes_per_window);
    for (std::size_t i = 0; i < 32; ++i) {
        CHECK(r1.observations[i].statement == r8.observations[i].statement);
        auto f1 = l1.entries()[i].fields;
        auto f8 = l8.entries()[i].fields;
        CHECK(f1.pi_size != f8.pi_size);
        f8.pi_size = f1.pi_size;
        CHECK(audit::AuditEntry{f1, {}, {}}.unsigned_line() == audit::AuditEntry{f8, {}, {}}.unsigned_line());
    }
}

TEST_CASE("fixed seeds give byte-identical logs, with or without workers") {
    const auto& a = reference().artifacts;
    const auto reg = registry_for(a);
    const Device dev(a, {});
    audit::AuditLog l1(audit::Signer::from_seed(3)), l2(audit::Signer::from_seed(3));
    run(dev, reg, first(16), {.batch = 4}, &l1);
    run(dev, reg, first(16), {.batch = 4, .threads = 4}, &l2);
    CHECK(l1.lines() == l2.lines());
}

TEST_CASE("an unregistered model fails before proving") {
    const Device dev(reference().artifacts, {});
    const zkp::Registry empty;
    CHECK_THROWS_AS(run(dev, empty, first(2), {}), RegistryError);
    CHECK_THROWS_AS(run(dev, registry_for(reference().artifacts), first(2), {.batch = 0}), ParameterError);
}

TEST_CASE("abstaining windows emit no decision constraints") {
    // A profile at the top of the grid abstains on nearly everything.
    auto a = reference().artifacts;
    a.profile = a.profile.with_tau(0.99);
    const auto reg = registry_for(a);
    const Device dev(a, {});
    const auto r = run(dev, reg, first(24), {.batch = 4});
    CHECK(r.summary.abstained > 0);
    CHECK(r.summary.acceptance_rate == 1.0);
    CHECK(r.summary.c4_instances == r.summary.decided * dev.circuit().c4_constraints());
    std::size_t rows = 0;
    for (const auto& o : r.observations) rows += dev.circuit().system(!o.statement.abstains()).size();
    CHECK(r.summary.constraint_instances == rows);
}

TEST_CASE("artifacts round trip through checksummed files") {
    TempDir tmp("zks_artifacts_test");
    const ArtifactDir dir(tmp.path / "model");
    const auto& a = reference().artifacts;
    save_artifacts(dir, a);
    const auto b = load_artifacts(dir);
    CHECK(b.model.model_hash() == a.model.model_hash());
    CHECK(b.profile.digest() == a.profile.digest());
    CHECK(b.tree.hash() == a.tree.hash());
    CHECK(b.stats.mean == a.stats.mean);

    const auto fm_bytes = serialize_float_model(reference().float_model);
    dir.write(kFloatModelFile, fm_bytes);
    CHECK(serialize_float_model(deserialize_float_model(dir.read(kFloatModelFile))) == fm_bytes);

    auto bytes = signal::read_file(dir.path() / kModelFile);
    bytes[bytes.size() / 2] ^= 1;
    signal::write_file(dir.path() / kModelFile, bytes);
    CHECK_THROWS_AS(load_artifacts(dir), FormatError);
    CHECK_THROWS_AS(dir.read("absent.bin"), FormatError);
    CHECK_FALSE(dir.has("absent.bin"));
}

TEST_CASE("registry file is append-only and revalidated on load") {
    TempDir tmp("zks_registry_test");
    const auto& a = reference().artifacts;
    save_artifacts(ArtifactDir(tmp.path / "v2"), a);
    save_artifacts(ArtifactDir(tmp.path / "v1"), older_reference().artifacts);
    const auto file = tmp.path / "registry.json";
    CHECK(register_artifacts(file, tmp.path / "v2") == a.model.model_hash());
    CHECK(register_artifacts(file, tmp.path / "v2") == a.model.model_hash());
    CHECK(load_registry(file).size() == 1);
    register_artifacts(file, tmp.path / "v1");
    CHECK(load_registry(file).size() == 2);

    // Same model, another threshold: conflicts with the listed entry.
    auto moved = a;
    moved.profile = a.profile.with_tau(0.25);
    save_artifacts(ArtifactDir(tmp.path / "v3"), moved);
    CHECK_THROWS_AS(register_artifacts(file, tmp.path / "v3"), RegistryError);
    CHECK(load_registry(file).size() == 2);
}

TEST_CASE("attacks are rejected with their expected reasons") {
    const auto& ref = reference();
    const auto& a = ref.artifacts;
    const auto reg = registry_for(a);
    const Device dev(a, {});
    const auto honest = run(dev, reg, first(4), {.batch = 2});
    REQUIRE(honest.summary.acceptance_rate == 1.0);

    audit::CampaignTally replay, tamper, rollback;
    for (std::uint64_t t = 0; t < 10; ++t) {
        const auto& b = honest.batches[t % 2];
        replay.add(audit::attack_replay(reg, {b.statements, b.proof}, 1000 + t, t));
        const auto& w = ref.test[t];
        tamper.add(audit::attack_tamper_threshold(a, reg, w, static_cast<std::int64_t>(t % 8), t));
        rollback.add(audit::attack_rollback(older_reference().artifacts, reg, w, t));
    }
    CHECK(replay.accepted == 0);
    CHECK(replay.reasons["bad-binding"] == 10);
    CHECK(tamper.accepted == 0);
    CHECK(tamper.reasons["bad-binding"] == 10);
    CHECK(rollback.accepted == 0);
    CHECK(rollback.reasons["unknown-hash"] == 10);
    // The same window and seed under the registered threshold verifies.
    CHECK(audit::submit_from(Device(a, {.seed = 3}), reg, ref.test[3], 3).accepted);
}

TEST_CASE("parallel_for covers every index once and rethrows") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 8, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                     if (i == 37) throw ParameterError("boom");
                                 }),
                    ParameterError);
    parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}
