#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "zks/calibrate/profile.hpp"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/encoder/float_model.hpp"
#include "zks/policy/action.hpp"
#include "zks/signal/dataset.hpp"
#include "zks/zkp/circuit.hpp"
#include "zks/zkp/merkle.hpp"
#include "zks/zkp/prover.hpp"
#include "zks/zkp/registry.hpp"
#include "zks/zkp/sponge.hpp"
#include "zks/zkp/verifier.hpp"

using namespace zks;
using namespace zks::zkp;
using policy::Decision;

namespace {

Fp random_fp(Rng& rng) { return Fp(rng.next_u64() % Fp::kModulus); }

// conf >= 0.75 ? (class 1 ? allow : (flag 0 ? alarm : deny)) : deny
policy::PolicyTree toy_tree(std::size_t k) {
    return policy::PolicyTree::from_json(
        R"({"if":{"confidence_at_least":0.75},
            "then":{"if":{"class":1},"then":{"decision":"allow","basis":["resident"]},
                    "else":{"if":{"flag":0,"is":true},"then":{"decision":"alarm","basis":["armed"]},
                            "else":{"decision":"deny","basis":["unknown"]}}},
            "else":{"decision":"deny","basis":["unsure"]}})",
        k);
}

struct Toy {
    std::size_t d = 8;
    std::size_t k = 4;
    double temperature = 1.0;
    std::int64_t tau_q = 48;
    calibrate::CalibrationProfile profile{1.0, 48.0 / 128.0, "toy", Fp(99)};
    policy::PolicyTree tree = toy_tree(4);
    CircuitParams params;
    std::shared_ptr<const Circuit> circuit;
};

Toy make_toy(std::size_t d = 8, std::size_t k = 4, std::uint64_t seed = 1) {
    Toy t;
    t.d = d;
    t.k = k;
    t.tree = toy_tree(k);
    Rng rng(seed);
    auto& h = t.params.head;
    h.in = d;
    h.out = k;
    for (std::size_t i = 0; i < d * k; ++i) h.w.push_back(static_cast<std::int8_t>(static_cast<int>(rng.below(41)) - 20));
    for (std::size_t i = 0; i < k; ++i) h.b.push_back(static_cast<std::int32_t>(rng.below(1001)) - 500);
    h.w_scale.assign(k, 0.002);
    t.params.table = encoder::ConfidenceTable::build(0.002, t.temperature, k);
    t.params.policy = policy::compile_tree(t.tree);
    t.params.tau_q = t.tau_q;
    t.params.h_theta = Fp(99);
    t.circuit = std::make_shared<const Circuit>(t.params);
    return t;
}

struct Window {
    Statement statement;
    WitnessInput input;
    std::int32_t u_q = 0;
};

// Honest device side: head, confidence, policy, commitment.
Window honest_window(const Toy& t, Rng& rng, std::uint64_t t_win) {
    Window w;
    w.input.latent.resize(t.d);
    for (auto& z : w.input.latent) z = static_cast<std::int8_t>(static_cast<int>(rng.below(255)) - 127);
    w.input.flags = static_cast<std::uint32_t>(rng.below(1u << 16));
    w.input.r = random_fp(rng);
    const auto& h = t.params.head;
    std::vector<std::int64_t> logits(t.k);
    for (std::size_t o = 0; o < t.k; ++o) {
        logits[o] = h.b[o];
        for (std::size_t c = 0; c < t.d; ++c) logits[o] += h.w[o * t.d + c] * w.input.latent[c];
    }
    w.u_q = t.params.table.lookup(encoder::top_margin(logits).second);
    const auto rec = policy::decide(logits, w.u_q, t.profile, {"z", "door", w.input.flags}, t.tree);
    w.statement.c = commit_latent(w.input.latent, w.input.r, w.input.flags);
    w.statement.h_theta = t.params.h_theta;
    w.statement.tau_q = t.tau_q;
    w.statement.t_win = t_win;
    w.statement.nonce = random_fp(rng);
    w.statement.action = rec.decision;
    return w;
}

Window honest_deciding(const Toy& t, Rng& rng, std::uint64_t t_win) {
    for (;;) {
        auto w = honest_window(t, rng, t_win);
        if (!w.statement.abstains()) return w;
    }
}

Proof prove_one(const Toy& t, const Window& w, std::uint64_t seed = 5, std::optional<std::uint32_t> k = {}) {
    return prove(*t.circuit, w.statement, w.input, ProveParams{k, seed});
}

struct Batch {
    std::vector<Statement> statements;
    std::vector<WitnessInput> inputs;
};

Batch honest_batch(const Toy& t, Rng& rng, std::size_t b) {
    Batch out;
    for (std::size_t i = 0; i < b; ++i) {
        const auto w = honest_window(t, rng, 100 + i);
        out.statements.push_back(w.statement);
        out.inputs.push_back(w.input);
    }
    return out;
}

encoder::QuantizedModel tiny_model(std::uint64_t seed) {
    encoder::ModelConfig cfg;
    cfg.frames = 64;
    cfg.subcarriers = 8;
    cfg.d0 = 8;
    cfg.n_blocks = 1;
    cfg.d_lat = 8;
    cfg.w_t = 4;
    cfg.group = 4;
    cfg.n_classes = 3;
    signal::DatasetSpec spec;
    spec.frames = 64;
    spec.subcarriers = 8;
    spec.n_classes = 3;
    spec.n_windows = 8;
    const auto data = signal::generate_dataset(spec);
    return encoder::quantize_model(encoder::FloatModel::random(cfg, seed), data);
}

}  // namespace

TEST_CASE("latent commitment is deterministic, hiding and binding") {
    Rng rng(1);
    std::vector<std::int8_t> z(32);
    for (auto& v : z) v = static_cast<std::int8_t>(static_cast<int>(rng.below(255)) - 127);
    const Fp r = random_fp(rng);
    CHECK(commit_latent(z, r) == commit_latent(z, r));

    std::set<std::uint64_t> seen;
    for (int i = 0; i < 10000; ++i) seen.insert(commit_latent(z, random_fp(rng)).value());
    CHECK(seen.size() == 10000);

    const Fp c0 = commit_latent(z, r);
    for (int i = 0; i < 1000; ++i) {
        auto z2 = z;
        const auto j = rng.below(z.size());
        z2[j] = static_cast<std::int8_t>(z2[j] == 127 ? 126 : z2[j] + 1);
        CHECK(commit_latent(z2, r) != c0);
    }
    CHECK(commit_latent(z, r, 1) != c0);

    auto bad = z;
    bad[0] = -128;
    CHECK_THROWS_AS(commit_latent(bad, r), EncodingError);
    CHECK_THROWS_AS(commit_latent(z, r, 1u << 16), EncodingError);
}

TEST_CASE("margin thresholds reproduce the confidence table exactly") {
    const auto t = make_toy();
    const auto& table = t.params.table;
    for (std::int64_t q = 0; q <= 128; ++q) {
        const auto M = t.circuit->margin_threshold(q);
        for (std::int64_t m = 0; m < 4 * (table.max_margin + 1); m += 7) {
            if (m > 2 * 20 * 127 * 8 + 1000) break;
            CHECK((table.lookup(m) >= q) == (m >= M));
        }
    }
}

TEST_CASE("constraint count matches the closed form for K=2, d=4") {
    const auto t = make_toy(4, 2, 3);
    const auto& c = *t.circuit;
    const std::size_t d = 4, K = 2, bits = 8, R = c.range_bits();
    // x^7 sbox: 4 products. Full rounds: 3 sboxes. Partial rounds: 1 sbox
    // and 2 materialized lanes.
    const std::size_t per_perm = 8 * 3 * 4 + 22 * (4 + 2);
    const std::size_t absorbed = (d + 6) / 7 + 2;
    const std::size_t perms = (absorbed + 1) / 2;
    CHECK(c.sponge_permutations() == perms);
    const std::size_t c1 = d * (bits + 1) + (16 + 1) + perms * per_perm + 1;
    const std::size_t c2 = 4, c3 = 2;
    // logits, two one-hot selectors with disjointness and products, two
    // range checks per class, the threshold check, one confidence bit, path
    // products (paths of length 2, 3, 3 and 1) and the action binding
    const std::size_t conf_bits = 1;
    const std::size_t path_products = 1 + 2 + 2 + 0;
    const std::size_t c4 = K + K * (2 + 1 + 2) + 2 + K * 2 * (R + 1) + (R + 1) + conf_bits * (2 + R + 1) +
                           path_products + 1;
    const auto pre = c.system(false).counts();
    const auto full = c.system(true).counts();
    CHECK(pre[Family::c1] == c1);
    CHECK(pre[Family::c2] == c2);
    CHECK(pre[Family::c3] == c3);
    CHECK(pre[Family::c4] == 0);
    CHECK(full[Family::c4] == c4);
    CHECK(c.c4_constraints() == c4);
    CHECK(c.prefix_constraints() == c1 + c2 + c3);
}

TEST_CASE("honest witnesses satisfy the circuit and the commitment matches in-circuit") {
    const auto t = make_toy();
    Rng rng(2);
    std::size_t deciding = 0;
    for (int i = 0; i < 200; ++i) {
        const auto w = honest_window(t, rng, static_cast<std::uint64_t>(i));
        const auto wit = t.circuit->witness(w.statement, w.input);
        CHECK(wit.size() == t.circuit->num_slots(!w.statement.abstains()));
        CHECK(t.circuit->system(!w.statement.abstains()).is_satisfied(wit));
        deciding += !w.statement.abstains();
    }
    CHECK(deciding > 20);
    CHECK(deciding < 190);
}

TEST_CASE("replacing the action makes the decision circuit unsatisfied") {
    const auto t = make_toy();
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto w = honest_deciding(t, rng, 1);
        auto wit = t.circuit->witness(w.statement, w.input);
        for (std::size_t a = 0; a < policy::kDecisionCount; ++a) {
            if (a == static_cast<std::size_t>(w.statement.action)) continue;
            auto bad = wit;
            bad[kPublicSlots[5]] = Fp(a);
            CHECK_FALSE(t.circuit->system(true).is_satisfied(bad));
        }
    }
}

TEST_CASE("a window below the threshold cannot be proven as a decision") {
    const auto t = make_toy();
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        auto w = honest_window(t, rng, 1);
        if (!w.statement.abstains()) continue;
        for (const auto a : {Decision::allow, Decision::deny, Decision::alarm}) {
            auto s = w.statement;
            s.action = a;
            if (w.u_q >= t.tau_q) continue;
            CHECK_FALSE(t.circuit->system(true).is_satisfied(t.circuit->witness(s, w.input)));
        }
    }
}

TEST_CASE("prove and verify: completeness on random honest windows") {
    const auto t = make_toy();
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const auto w = honest_window(t, rng, static_cast<std::uint64_t>(i));
        const auto proof = prove_one(t, w, static_cast<std::uint64_t>(i));
        const auto r = verify(*t.circuit, w.statement, proof);
        CHECK(r.accepted);
        CHECK_FALSE(r.insecure);
    }
}

TEST_CASE("prover refuses a dishonest witness") {
    const auto t = make_toy();
    Rng rng(6);
    auto w = honest_deciding(t, rng, 1);
    w.statement.action = w.statement.action == Decision::allow ? Decision::deny : Decision::allow;
    CHECK_THROWS_AS(prove_one(t, w), ProverError);
    auto w2 = honest_window(t, rng, 2);
    w2.statement.c += Fp::one();
    CHECK_THROWS_AS(prove_one(t, w2), ProverError);
}

TEST_CASE("k = 0 is accepted but flagged insecure") {
    const auto t = make_toy();
    Rng rng(7);
    const auto w = honest_deciding(t, rng, 1);
    const auto proof = prove_one(t, w, 1, 0u);
    const auto r = verify(*t.circuit, w.statement, proof);
    CHECK(r.accepted);
    CHECK(r.insecure);
}

TEST_CASE("binding tampering is rejected deterministically") {
    const auto t = make_toy();
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        const auto w = honest_deciding(t, rng, 10);
        const auto proof = prove_one(t, w, static_cast<std::uint64_t>(i));

        auto lowered = w.statement;
        lowered.tau_q -= 1 + static_cast<std::int64_t>(rng.below(40));
        auto r = verify(*t.circuit, lowered, proof);
        CHECK_FALSE(r.accepted);
        CHECK(r.reason == Reject::bad_binding);

        auto replay = w.statement;
        replay.t_win += 1 + rng.below(1000);
        replay.nonce = random_fp(rng);
        r = verify(*t.circuit, replay, proof);
        CHECK_FALSE(r.accepted);
        CHECK(r.reason == Reject::bad_binding);

        auto swapped = w.statement;
        swapped.action = swapped.action == Decision::alarm ? Decision::allow : Decision::alarm;
        CHECK_FALSE(verify(*t.circuit, swapped, proof).accepted);

        auto other_model = w.statement;
        other_model.h_theta = Fp(100);
        CHECK(verify(*t.circuit, other_model, proof).reason == Reject::bad_binding);

        auto other_c = w.statement;
        other_c.c += Fp::one();
        CHECK(verify(*t.circuit, other_c, proof).reason == Reject::bad_binding);
    }
}

TEST_CASE("a tampered proof is rejected") {
    const auto t = make_toy();
    Rng rng(9);
    const auto w = honest_deciding(t, rng, 1);
    const auto proof = prove_one(t, w);
    for (int i = 0; i < 200; ++i) {
        auto bad = proof;
        const auto which = rng.below(3);
        if (which == 0) bad.values[rng.below(bad.values.size())] += Fp::one();
        if (which == 1) bad.salts[rng.below(bad.salts.size())] += Fp::one();
        if (which == 2) {
            if (bad.siblings.empty()) continue;
            bad.siblings[rng.below(bad.siblings.size())] += Fp::one();
        }
        CHECK_FALSE(verify(*t.circuit, w.statement, bad).accepted);
    }
    auto truncated = proof;
    truncated.values.pop_back();
    CHECK(verify(*t.circuit, w.statement, truncated).reason == Reject::malformed);
    auto other_root = proof;
    other_root.root += Fp::one();
    CHECK_FALSE(verify(*t.circuit, w.statement, other_root).accepted);
}

TEST_CASE("proof wire format round-trips and rejects malformed bytes") {
    const auto t = make_toy();
    Rng rng(10);
    const auto b = honest_batch(t, rng, 4);
    const auto proof = prove_batch(*t.circuit, b.statements, b.inputs, {});
    const auto bytes = serialize_proof(b.statements, proof);
    CHECK(bytes.size() == proof_bytes(4, proof.salts.size(), proof.siblings.size()));
    const auto back = parse_proof(bytes);
    CHECK(back.statements == b.statements);
    CHECK(back.proof == proof);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "ZKPF");

    auto cut = bytes;
    cut.pop_back();
    CHECK_THROWS_AS(parse_proof(cut), FormatError);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(parse_proof(extra), FormatError);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(parse_proof(magic), FormatError);

    const auto s = b.statements[0];
    CHECK(Statement::from_json(s.to_json()) == s);
    CHECK_THROWS_AS(Statement::from_json(R"({"c":"1"})"), FormatError);
}

TEST_CASE("proof size stays under the per-opening bound and grows with k") {
    const auto t = make_toy();
    Rng rng(11);
    const auto w = honest_deciding(t, rng, 1);
    const auto& cs = t.circuit->system(true);
    std::size_t width = 0;
    for (std::size_t i = 0; i < cs.size(); ++i) width = std::max(width, cs.slots_of(i).size());
    const std::size_t binding = binding_slots(cs).size();
    const std::size_t depth = merkle_depth(cs.num_vars);
    std::size_t last = 0;
    for (const std::uint32_t k : {0u, 1u, 2u, 4u, 8u, 16u, 64u, 256u}) {
        // average over salts so the trend is not a single draw
        std::size_t total = 0;
        for (std::uint64_t s = 0; s < 8; ++s) {
            const auto p = prove_one(t, w, s, k);
            const auto bytes = serialize_proof(std::span(&w.statement, 1), p).size();
            // every opening carries at most width slots, each with a value,
            // a salt and a full authentication path
            const std::size_t bound = proof_bytes(1, binding + k * width, (binding + k * width) * depth);
            CHECK(bytes <= bound);
            total += bytes;
        }
        CHECK(total >= last);
        last = total;
    }
    // k = 0 opens exactly the binding block
    const auto p0 = prove_one(t, w, 1, 0u);
    CHECK(p0.salts.size() == binding);
}

TEST_CASE("default openings meet the 1e-3 miss bound minimally") {
    for (const std::size_t m : {2u, 10u, 100u, 1000u, 5000u}) {
        const auto k = default_openings(m);
        CHECK(miss_probability(m, k) <= 1e-3);
        CHECK(miss_probability(m, k - 1) > 1e-3);
    }
    CHECK(miss_probability(100, 0) == 1.0);
}

TEST_CASE("a single violated constraint is caught at the analytic rate") {
    const auto t = make_toy();
    Rng rng(12);
    const auto w = honest_deciding(t, rng, 1);
    const auto wit = t.circuit->witness(w.statement, w.input);
    const auto& honest = t.circuit->system(true);
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < honest.size(); ++i) {
        if (!honest.constraints[i].binding) pool.push_back(i);
    }
    const std::size_t m = pool.size();
    const auto k = default_openings(m);
    const int trials = 1000;
    int rejected = 0;
    for (int i = 0; i < trials; ++i) {
        auto cs = honest;
        cs.constraints[pool[rng.below(m)]].c.add_constant(Fp::one());
        REQUIRE(cs.first_unsatisfied(wit).has_value());
        const std::vector<std::vector<Fp>> ws = {wit};
        const auto proof = commit_and_open(cs, std::span(&w.statement, 1), ws, k, rng.next_u64());
        const auto r = verify_system(cs, std::span(&w.statement, 1), proof);
        if (!r.accepted) {
            CHECK(r.reason == Reject::bad_constraint);
            ++rejected;
        }
    }
    const double p_reject = 1.0 - miss_probability(m, k);
    CHECK(p_reject >= 0.999);
    CHECK(static_cast<double>(rejected) / trials >= 0.995);
    // misses follow Binomial(trials, 1 - p_reject); central 99% interval
    const double q = 1.0 - p_reject;
    double cdf = 0.0, pmf = std::pow(1.0 - q, trials);
    int lo = -1, hi = trials;
    for (int x = 0; x <= trials; ++x) {
        cdf += pmf;
        if (lo < 0 && cdf >= 0.005) lo = x;
        if (cdf >= 0.995) {
            hi = x;
            break;
        }
        pmf *= (static_cast<double>(trials - x) / (x + 1)) * (q / (1.0 - q));
    }
    const int misses = trials - rejected;
    CHECK(misses >= std::max(lo, 0) - 1);  // lo is 0 for these parameters
    CHECK(misses <= hi);
}

TEST_CASE("abstaining windows carry no decision constraints") {
    const auto t = make_toy();
    Rng rng(13);
    const auto& pre = t.circuit->system(false);
    CHECK(pre.counts()[Family::c4] == 0);
    for (int i = 0; i < 100; ++i) {
        const auto w = honest_window(t, rng, 1);
        if (!w.statement.abstains()) continue;
        CHECK(t.circuit->witness(w.statement, w.input).size() == pre.num_vars);
        const auto proof = prove_one(t, w);
        CHECK(verify(*t.circuit, w.statement, proof).accepted);
    }
}

TEST_CASE("batches: B=1 equals single proving, all-pass rule, parameter checks") {
    const auto t = make_toy();
    Rng rng(14);
    const auto w = honest_deciding(t, rng, 1);
    const auto single = prove_one(t, w, 3);
    const auto batched = prove_batch(*t.circuit, std::span(&w.statement, 1), std::span(&w.input, 1), {{}, 3});
    CHECK(serialize_proof(std::span(&w.statement, 1), single) ==
          serialize_proof(std::span(&w.statement, 1), batched));

    for (int trial = 0; trial < 20; ++trial) {
        const auto b = honest_batch(t, rng, 8);
        const auto proof = prove_batch(*t.circuit, b.statements, b.inputs, {{}, static_cast<std::uint64_t>(trial)});
        CHECK(verify_batch(*t.circuit, b.statements, proof).accepted);

        // one corrupted instance, committed by a cheating prover
        const bool full = std::any_of(b.statements.begin(), b.statements.end(),
                                      [](const Statement& s) { return !s.abstains(); });
        std::vector<std::vector<Fp>> ws;
        for (std::size_t i = 0; i < 8; ++i) ws.push_back(t.circuit->witness(b.statements[i], b.inputs[i]));
        const auto victim = rng.below(8);
        ws[victim][8 + rng.below(t.d)] += Fp::one();  // a latent slot
        const auto& cs = t.circuit->system(full);
        const auto forged = commit_and_open(cs, b.statements, ws, openings_for(*t.circuit, b.statements), 1);
        const auto r = verify_batch(*t.circuit, b.statements, forged);
        CHECK_FALSE(r.accepted);
    }

    auto b = honest_batch(t, rng, 3);
    auto mixed = b.statements;
    mixed[1].h_theta = Fp(5);
    CHECK_THROWS_AS(prove_batch(*t.circuit, mixed, b.inputs, {}), ParameterError);
    auto unordered = b.statements;
    std::swap(unordered[0], unordered[1]);
    std::swap(b.inputs[0], b.inputs[1]);
    CHECK_THROWS_AS(prove_batch(*t.circuit, unordered, b.inputs, {}), ParameterError);
}

TEST_CASE("amortized bytes per window decrease over B in {1, 4, 8, 16}") {
    const auto t = make_toy();
    Rng rng(15);
    double last = 1e300;
    for (const std::size_t B : {1u, 4u, 8u, 16u}) {
        Batch b;
        for (std::size_t i = 0; i < B; ++i) {
            const auto w = honest_deciding(t, rng, 100 + i);
            b.statements.push_back(w.statement);
            b.inputs.push_back(w.input);
        }
        const auto proof = prove_batch(*t.circuit, b.statements, b.inputs, {{}, 1});
        const auto bytes = serialize_proof(b.statements, proof).size();
        const auto per = amortized_metrics(0.0, bytes, B).bytes_per_window;
        CHECK(per < last);
        last = per;
    }
}

TEST_CASE("amortized metrics divide exactly") {
    const auto a = amortized_metrics(0.080, 8000, 8);
    CHECK(a.seconds_per_window == doctest::Approx(0.010).epsilon(1e-15));
    CHECK(a.bytes_per_window == 1000.0);
    const auto one = amortized_metrics(0.123, 777, 1);
    CHECK(one.seconds_per_window == 0.123);
    CHECK(one.bytes_per_window == 777.0);
    CHECK_THROWS_AS(amortized_metrics(1.0, 1, 0), ParameterError);
}

TEST_CASE("circuit construction errors") {
    auto t = make_toy();
    auto p = t.params;
    p.head.out = 1;
    CHECK_THROWS_AS(Circuit{p}, ParameterError);
    p = t.params;
    p.max_constraints = 100;
    CHECK_THROWS_AS(Circuit{p}, CapacityError);
    p = t.params;
    p.head.b[0] = std::numeric_limits<std::int32_t>::max();
    p.head.w.assign(p.head.w.size(), 127);
    CHECK_NOTHROW(Circuit{p});
    p = t.params;
    p.policy = policy::compile_tree(toy_tree(3));
    CHECK_THROWS_AS(Circuit{p}, ParameterError);
}

TEST_CASE("registry: idempotent, append-only, hash-sensitive") {
    const auto qm = tiny_model(1);
    const calibrate::CalibrationProfile prof(1.0, 0.5, "tiny", qm.model_hash());
    const auto tree = policy::PolicyTree::leaf(Decision::allow, {"ok"}, 3);
    Registry reg;
    const auto& e = reg.register_model(qm, prof, tree);
    CHECK(e.h_theta == qm.model_hash());
    CHECK(e.tau_q == 64);
    CHECK(&reg.register_model(qm, prof, tree) == &e);
    CHECK(reg.size() == 1);
    CHECK_THROWS_AS(reg.register_model(qm, prof.with_tau(0.25), tree), RegistryError);
    CHECK_THROWS_AS(reg.register_model(qm, calibrate::CalibrationProfile(1.0, 0.5, "tiny", Fp(3)), tree),
                    RegistryError);
    CHECK_THROWS_AS(reg.at(Fp(12345)), RegistryError);
    CHECK(reg.find(Fp(12345)) == nullptr);

    Rng rng(16);
    for (int i = 0; i < 20; ++i) {
        auto other = qm;
        auto& w = other.head.w[rng.below(other.head.w.size())];
        w = static_cast<std::int8_t>(w == 127 ? 126 : w + 1);
        CHECK(other.model_hash() != qm.model_hash());
        CHECK(other.backbone_hash() == qm.backbone_hash());
    }
    const auto qm2 = encoder::QuantizedModel::deserialize(qm.serialize());
    CHECK(qm2.model_hash() == qm.model_hash());

    // a proof against an unregistered hash is rejected by lookup
    Statement s;
    s.h_theta = Fp(12345);
    CHECK(verify_registered(reg, std::span(&s, 1), Proof{}).reason == Reject::unknown_hash);
}
