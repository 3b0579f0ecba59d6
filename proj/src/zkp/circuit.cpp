#include "zks/zkp/circuit.hpp"

#include <algorithm>
#include <bit>
#include <map>

#include "json.hpp"
#include "zks/calibrate/profile.hpp"
#include "zks/common/errors.hpp"
#include "zks/zkp/sponge.hpp"

namespace zks::zkp {
namespace {

using LC = LinearCombination;

std::int64_t lane_offset(int bits) { return std::int64_t{1} << (bits - 1); }

void check_latent(std::span<const std::int8_t> latent, std::uint32_t flags, int bits) {
    if (bits < 2 || bits > 8) throw EncodingError("latent bit width must be in 2..8");
    const std::int64_t qmax = lane_offset(bits) - 1;
    for (const auto z : latent) {
        if (z < -qmax || z > qmax) throw EncodingError("latent entry outside the quantizer range");
    }
    if (flags >> kFlagBits) throw EncodingError("context flags exceed 16 bits");
}

std::size_t absorbed_elements(std::size_t d) { return (d + kLanesPerElement - 1) / kLanesPerElement + 2; }

Fp lane_weight(std::size_t lane) { return Fp(std::uint64_t{1} << (8 * lane)); }

Var materialize(CircuitBuilder& b, const LC& lc, Family f) {
    const Var v = b.alloc(b.eval(lc));
    b.enforce_equal(lc, LC(v), f);
    return v;
}

Var sbox(CircuitBuilder& b, const LC& t) {
    const Var x2 = b.mul(t, t, Family::c1);
    const Var x3 = b.mul(LC(x2), t, Family::c1);
    const Var x4 = b.mul(LC(x2), LC(x2), Family::c1);
    return b.mul(LC(x4), LC(x3), Family::c1);
}

// Mirrors permute(); the two linear lanes of a partial round are
// materialized so constraint widths stay bounded.
void permute_in_circuit(CircuitBuilder& b, std::array<LC, 3>& s) {
    const auto& rc = permutation_params().round_constants;
    for (std::size_t r = 0; r < PermutationParams::kRounds; ++r) {
        if (PermutationParams::is_full_round(r)) {
            std::array<Var, 3> x{};
            for (std::size_t i = 0; i < 3; ++i) x[i] = sbox(b, s[i] + LC::constant(rc[r][i]));
            LC sum = LC(x[0]) + LC(x[1]) + LC(x[2]);
            for (std::size_t i = 0; i < 3; ++i) s[i] = LC(x[i]) + sum;
        } else {
            const Var x0 = sbox(b, s[0] + LC::constant(rc[r][0]));
            const LC s1 = s[1] + LC::constant(rc[r][1]);
            const LC s2 = s[2] + LC::constant(rc[r][2]);
            const LC sum = LC(x0) + s1 + s2;
            s[0] = LC(x0) + sum;
            s[1] = LC(materialize(b, s1 + sum, Family::c1));
            s[2] = LC(materialize(b, s2 + sum, Family::c1));
        }
    }
}

std::pair<std::size_t, std::size_t> top_two(std::span<const std::int64_t> f) {
    std::size_t top = 0;
    for (std::size_t j = 1; j < f.size(); ++j) {
        if (f[j] > f[top]) top = j;
    }
    std::size_t second = top == 0 ? 1 : 0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        if (j != top && f[j] > f[second]) second = j;
    }
    return {top, second};
}

}  // namespace

std::vector<Fp> encode_latent(std::span<const std::int8_t> latent, std::uint32_t flags, Fp r, int bits) {
    check_latent(latent, flags, bits);
    std::vector<Fp> out;
    out.reserve(absorbed_elements(latent.size()));
    for (std::size_t i = 0; i < latent.size(); i += kLanesPerElement) {
        std::uint64_t v = 0;
        for (std::size_t j = 0; j < kLanesPerElement && i + j < latent.size(); ++j) {
            v |= static_cast<std::uint64_t>(latent[i + j] + lane_offset(bits)) << (8 * j);
        }
        out.emplace_back(v);
    }
    out.emplace_back(flags);
    out.push_back(r);
    return out;
}

Fp commit_latent(std::span<const std::int8_t> latent, Fp r, std::uint32_t flags, int bits) {
    return sponge_hash(encode_latent(latent, flags, r, bits), Domain::commitment);
}

std::array<Fp, Statement::kElements> Statement::elements() const {
    return {c, h_theta, Fp::from_signed(tau_q), Fp(t_win), nonce, Fp(static_cast<std::uint64_t>(action))};
}

std::string Statement::to_json() const {
    nlohmann::json j;
    j["c"] = c.to_hex();
    j["h_theta"] = h_theta.to_hex();
    j["tau_q"] = tau_q;
    j["t_win"] = t_win;
    j["nonce"] = nonce.to_hex();
    j["action"] = policy::to_string(action);
    return j.dump();
}

Statement Statement::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        Statement s;
        s.c = Fp::from_hex(j.at("c").get<std::string>());
        s.h_theta = Fp::from_hex(j.at("h_theta").get<std::string>());
        s.tau_q = j.at("tau_q").get<std::int64_t>();
        s.t_win = j.at("t_win").get<std::uint64_t>();
        s.nonce = Fp::from_hex(j.at("nonce").get<std::string>());
        const auto a = policy::parse_decision(j.at("action").get<std::string>());
        if (!a) throw FormatError("unknown action in statement");
        s.action = *a;
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed statement: ") + e.what());
    }
}

Circuit::Circuit(CircuitParams params) : params_(std::move(params)) {
    const auto& h = params_.head;
    if (h.out < 2 || h.w.size() != h.in * h.out || h.b.size() != h.out) {
        throw ParameterError("circuit head needs K >= 2 and consistent weights");
    }
    if (params_.policy.n_classes != h.out) throw ParameterError("policy and head disagree on the class count");
    if (params_.bits < 2 || params_.bits > 8) throw ParameterError("latent bit width must be in 2..8");
    if (params_.table.values.size() != encoder::ConfidenceTable::kBuckets ||
        !std::is_sorted(params_.table.values.begin(), params_.table.values.end())) {
        throw ParameterError("confidence table must have 256 non-decreasing entries");
    }
    const std::int64_t qmax = lane_offset(params_.bits) - 1;
    for (std::size_t o = 0; o < h.out; ++o) {
        std::int64_t bound = std::abs(static_cast<std::int64_t>(h.b[o]));
        for (std::size_t c = 0; c < h.in; ++c) bound += qmax * std::abs(static_cast<std::int64_t>(h.w[o * h.in + c]));
        logit_bound_ = std::max(logit_bound_, bound);
    }
    // differences of two logits plus one more logit bound of slack
    range_bits_ = static_cast<unsigned>(std::bit_width(static_cast<std::uint64_t>(4 * logit_bound_ + 4)));
    if (range_bits_ > 62) throw CapacityError("head logits too wide for the range checks");

    Statement s;
    s.action = policy::Decision::allow;
    WitnessInput in;
    in.latent.assign(h.in, 0);
    for (const bool full : {false, true}) {
        CircuitBuilder b(true);
        synthesize(b, s, in, full);
        if (b.num_constraints() > params_.max_constraints) {
            throw CapacityError("circuit exceeds the configured constraint budget");
        }
        (full ? full_ : prefix_) = b.take_system();
    }
}

Circuit Circuit::from_model(const encoder::QuantizedModel& qm, const calibrate::CalibrationProfile& profile,
                            const policy::PolicyTree& tree) {
    CircuitParams p;
    p.head = qm.head;
    p.bits = qm.bits;
    p.table = encoder::ConfidenceTable::build(qm.logit_scale(), profile.temperature(), qm.head.out);
    p.policy = policy::compile_tree(tree);
    p.tau_q = profile.tau_q();
    p.h_theta = qm.model_hash();
    return Circuit(std::move(p));
}

std::size_t Circuit::sponge_permutations() const {
    return (absorbed_elements(params_.head.in) + PermutationParams::kRate - 1) / PermutationParams::kRate;
}

std::int64_t Circuit::margin_threshold(std::int64_t q) const {
    const auto& t = params_.table;
    const std::int64_t never = 2 * logit_bound_ + 1;
    const auto it = std::lower_bound(t.values.begin(), t.values.end(), q);
    if (it == t.values.end()) return never;
    return std::min(never, static_cast<std::int64_t>(it - t.values.begin()) << t.shift);
}

std::vector<Fp> Circuit::witness(const Statement& s, const WitnessInput& in) const {
    if (in.latent.size() != params_.head.in) throw ParameterError("latent width does not match the circuit");
    check_latent(in.latent, in.flags, params_.bits);
    CircuitBuilder b(false);
    synthesize(b, s, in, !s.abstains());
    return b.take_witness();
}

void Circuit::synthesize(CircuitBuilder& b, const Statement& s, const WitnessInput& in, bool full) const {
    const auto& h = params_.head;
    const auto pub = s.elements();
    std::array<Var, Statement::kElements> p{};
    for (std::size_t i = 0; i < pub.size(); ++i) p[i] = b.alloc_public(pub[i]);
    const Var c_pub = p[0], h_pub = p[1], tau_pub = p[2], t_pub = p[3], nonce_pub = p[4], a_pub = p[5];

    // C2: registered model hash and threshold
    const Var h_w = b.alloc(params_.h_theta);
    b.enforce_equal(LC(h_w), LC::constant(params_.h_theta), Family::c2, true);
    b.enforce_equal(LC(h_pub), LC(h_w), Family::c2, true);
    const Fp tau_fp = Fp::from_signed(params_.tau_q);
    const Var tau_w = b.alloc(tau_fp);
    b.enforce_equal(LC(tau_w), LC::constant(tau_fp), Family::c2, true);
    b.enforce_equal(LC(tau_pub), LC(tau_w), Family::c2, true);

    // C3: window time and nonce
    const Var t_w = b.alloc(Fp(s.t_win));
    b.enforce_equal(LC(t_pub), LC(t_w), Family::c3, true);
    const Var nonce_w = b.alloc(s.nonce);
    b.enforce_equal(LC(nonce_pub), LC(nonce_w), Family::c3, true);

    // C1: latent commitment
    const std::int64_t qmax = lane_offset(params_.bits) - 1;
    std::vector<Var> z(h.in);
    std::vector<LC> absorbed;
    for (std::size_t c = 0; c < h.in; ++c) {
        z[c] = b.alloc(Fp::from_signed(in.latent[c]));
        b.range_check(LC(z[c]) + LC::constant_signed(qmax), static_cast<unsigned>(params_.bits), Family::c1);
        if (c % kLanesPerElement == 0) absorbed.emplace_back();
        absorbed.back().add(z[c], lane_weight(c % kLanesPerElement));
        absorbed.back().add_constant(Fp(static_cast<std::uint64_t>(lane_offset(params_.bits))) *
                                     lane_weight(c % kLanesPerElement));
    }
    const Var flags = b.alloc(Fp(in.flags));
    const auto flag_bits = b.range_check(LC(flags), kFlagBits, Family::c1);
    absorbed.emplace_back(flags);
    absorbed.emplace_back(b.alloc(in.r));

    std::array<LC, 3> st = {LC(), LC(), LC::constant(capacity_tag(absorbed.size(), Domain::commitment))};
    std::size_t i = 0;
    do {
        for (std::size_t j = 0; j < PermutationParams::kRate && i < absorbed.size(); ++j, ++i) st[j].add(absorbed[i]);
        permute_in_circuit(b, st);
    } while (i < absorbed.size());
    b.enforce_equal(st[0], LC(c_pub), Family::c1, true);

    if (!full) return;

    // C4: head, argmax, confidence threshold and policy path
    const std::size_t K = h.out;
    const unsigned R = range_bits_;
    std::vector<std::int64_t> logits(K);
    std::vector<Var> f(K);
    for (std::size_t k = 0; k < K; ++k) {
        LC acc = LC::constant_signed(h.b[k]);
        std::int64_t v = h.b[k];
        for (std::size_t c = 0; c < h.in; ++c) {
            const std::int64_t w = h.w[k * h.in + c];
            acc.add(z[c], Fp::from_signed(w));
            v += w * in.latent[c];
        }
        logits[k] = v;
        f[k] = b.alloc(Fp::from_signed(v));
        b.enforce_equal(acc, LC(f[k]), Family::c4);
    }
    const auto [top, second] = top_two(logits);
    std::vector<Var> sel(K), sec(K);
    LC sel_sum, sec_sum, top_lc, second_lc;
    for (std::size_t k = 0; k < K; ++k) {
        sel[k] = b.boolean(k == top, Family::c4);
        sec[k] = b.boolean(k == second, Family::c4);
        sel_sum.add(sel[k], Fp::one());
        sec_sum.add(sec[k], Fp::one());
        b.enforce(LC(sel[k]), LC(sec[k]), LC(), Family::c4);
        top_lc.add(b.mul(LC(sel[k]), LC(f[k]), Family::c4), Fp::one());
        second_lc.add(b.mul(LC(sec[k]), LC(f[k]), Family::c4), Fp::one());
    }
    b.enforce_equal(sel_sum, LC::constant(Fp::one()), Family::c4);
    b.enforce_equal(sec_sum, LC::constant(Fp::one()), Family::c4);
    const Fp gap = Fp(static_cast<std::uint64_t>(2 * logit_bound_ + 1));
    for (std::size_t j = 0; j < K; ++j) {
        // top beats every lower index strictly and every higher index weakly
        LC d = top_lc - LC(f[j]);
        for (std::size_t k = j + 1; k < K; ++k) d.add(sel[k], -Fp::one());
        b.range_check(d, R, Family::c4);
        b.range_check(second_lc - LC(f[j]) + LC(sel[j]) * gap, R, Family::c4);
    }
    const LC margin = top_lc - second_lc;
    b.range_check(margin - LC::constant_signed(margin_threshold(params_.tau_q)), R, Family::c4);

    const std::int64_t m_val = logits[top] - logits[second];
    std::map<std::int64_t, Var> conf_bits;
    auto confidence_bit = [&](std::int64_t q) {
        if (auto it = conf_bits.find(q); it != conf_bits.end()) return it->second;
        const std::int64_t M = margin_threshold(q);
        const Var bit = b.boolean(m_val >= M, Family::c4);
        const Var bm = b.mul(LC(bit), margin, Family::c4);
        // bit = 1: m - M >= 0; bit = 0: M - 1 - m >= 0
        LC d = LC(bm) * Fp(2) - margin + LC(bit) * (Fp::one() - Fp::from_signed(2 * M));
        d.add_constant(Fp::from_signed(M - 1));
        b.range_check(d, R, Family::c4);
        conf_bits.emplace(q, bit);
        return bit;
    };

    using policy::Comparison;
    LC action;
    for (const auto& frag : params_.policy.fragments) {
        std::vector<LC> lits;
        for (const auto& cmp : frag.path) {
            Var bit = 0;
            bool positive = true;
            switch (cmp.var) {
                case Comparison::Var::argmax:
                    bit = sel[static_cast<std::size_t>(cmp.constant)];
                    positive = cmp.op == Comparison::Op::eq;
                    break;
                case Comparison::Var::confidence:
                    bit = confidence_bit(cmp.constant);
                    positive = cmp.op == Comparison::Op::ge;
                    break;
                case Comparison::Var::flag:
                    bit = flag_bits[cmp.flag];
                    positive = (cmp.op == Comparison::Op::eq) == (cmp.constant == 1);
                    break;
            }
            lits.push_back(positive ? LC(bit) : LC::constant(Fp::one()) - LC(bit));
        }
        LC leaf = LC::constant(Fp::one());
        if (!lits.empty()) {
            leaf = lits.front();
            for (std::size_t k = 1; k < lits.size(); ++k) leaf = LC(b.mul(leaf, lits[k], Family::c4));
        }
        action.add(leaf, Fp(static_cast<std::uint64_t>(frag.decision)));
    }
    b.enforce_equal(action, LC(a_pub), Family::c4, true);
}

}  // namespace zks::zkp
