#include <cmath>

#include "zks/common/bytes.hpp"
#include "zks/common/errors.hpp"
#include "zks/encoder/quantized_model.hpp"
#include "zks/zkp/sponge.hpp"

namespace zks::encoder {
namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kMaxWidth = 4096;

void put(ByteWriter& w, const Requant& r) {
    w.i64(r.mult);
    w.u8(static_cast<std::uint8_t>(r.shift));
}

void put(ByteWriter& w, const OutMap& m) {
    w.u32(static_cast<std::uint32_t>(m.rq.size()));
    for (std::size_t c = 0; c < m.rq.size(); ++c) {
        put(w, m.rq[c]);
        w.i64(m.zero[c]);
    }
}

void put(ByteWriter& w, const QLinear& l) {
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    for (double v : l.w_scale) w.f64(v);
    for (auto v : l.w) w.u8(static_cast<std::uint8_t>(v));
    for (auto v : l.b) w.i32(v);
    put(w, l.out_map);
}

void put(ByteWriter& w, const Lut& l) {
    w.f64(l.lo);
    w.f64(l.step);
    w.f64(l.out_unit);
    w.u32(static_cast<std::uint32_t>(l.entries.size()));
    for (auto v : l.entries) w.i32(v);
}

void put(ByteWriter& w, const LutInput& in) {
    put(w, in.to_pos);
    w.i64(in.offset);
}

void put(ByteWriter& w, const QAttention& a) {
    put(w, a.q);
    put(w, a.k);
    put(w, a.v);
    put(w, a.o);
    put(w, a.score_pos);
}

void put(ByteWriter& w, const QResidual& r) {
    w.u32(static_cast<std::uint32_t>(r.ra.size()));
    for (std::size_t c = 0; c < r.ra.size(); ++c) {
        put(w, r.ra[c]);
        put(w, r.rb[c]);
        w.i64(r.bias[c]);
    }
}

void put(ByteWriter& w, const ActScale& s) {
    w.u32(static_cast<std::uint32_t>(s.scale.size()));
    for (std::size_t c = 0; c < s.scale.size(); ++c) {
        w.f64(s.scale[c]);
        w.f64(s.offset[c]);
    }
}

Requant get_requant(ByteReader& r) {
    Requant q;
    q.mult = r.i64();
    q.shift = r.u8();
    if (q.mult < 0 || q.mult > (std::int64_t{1} << 31) || q.shift < 1 || q.shift > 62) {
        throw FormatError("bad rescale parameters");
    }
    return q;
}

double positive(ByteReader& r) {
    const double v = r.f64();
    if (!(v > 0.0) || !std::isfinite(v)) throw FormatError("model scale must be positive and finite");
    return v;
}

OutMap get_out_map(ByteReader& r) {
    OutMap m;
    const std::size_t n = r.count(17);
    for (std::size_t c = 0; c < n; ++c) {
        m.rq.push_back(get_requant(r));
        m.zero.push_back(r.i64());
    }
    return m;
}

QLinear get_linear(ByteReader& r) {
    QLinear l;
    l.in = r.u32();
    l.out = r.u32();
    if (l.in == 0 || l.out == 0 || l.in > kMaxWidth || l.out > kMaxWidth) throw FormatError("bad layer shape");
    for (std::size_t i = 0; i < l.out; ++i) l.w_scale.push_back(positive(r));
    for (auto b : r.raw(l.in * l.out)) l.w.push_back(static_cast<std::int8_t>(b));
    for (std::size_t i = 0; i < l.out; ++i) l.b.push_back(r.i32());
    l.out_map = get_out_map(r);
    if (!l.out_map.empty() && l.out_map.rq.size() != l.out) throw FormatError("output map width mismatch");
    return l;
}

Lut get_lut(ByteReader& r) {
    Lut l;
    l.lo = r.f64();
    l.step = positive(r);
    l.out_unit = positive(r);
    if (!std::isfinite(l.lo)) throw FormatError("bad lookup range");
    const std::size_t n = r.count(4);
    if (n < 2) throw FormatError("lookup table too small");
    for (std::size_t i = 0; i < n; ++i) l.entries.push_back(r.i32());
    return l;
}

LutInput get_lut_input(ByteReader& r) {
    LutInput in;
    in.to_pos = get_requant(r);
    in.offset = r.i64();
    return in;
}

QAttention get_attention(ByteReader& r) {
    QAttention a;
    a.q = get_linear(r);
    a.k = get_linear(r);
    a.v = get_linear(r);
    a.o = get_linear(r);
    a.score_pos = get_lut_input(r);
    return a;
}

QResidual get_residual(ByteReader& r) {
    QResidual q;
    const std::size_t n = r.count(26);
    for (std::size_t c = 0; c < n; ++c) {
        q.ra.push_back(get_requant(r));
        q.rb.push_back(get_requant(r));
        q.bias.push_back(r.i64());
    }
    return q;
}

ActScale get_act_scale(ByteReader& r) {
    ActScale s;
    const std::size_t n = r.count(16);
    for (std::size_t c = 0; c < n; ++c) {
        s.scale.push_back(positive(r));
        s.offset.push_back(r.f64());
        if (!std::isfinite(s.offset.back())) throw FormatError("bad activation offset");
    }
    return s;
}

void put_config(ByteWriter& w, const ModelConfig& c, int bits) {
    for (std::size_t v : {c.frames, c.subcarriers, c.d0, c.n_blocks, c.d_lat, c.w_t, c.group, c.n_classes}) {
        w.u32(static_cast<std::uint32_t>(v));
    }
    w.u32(static_cast<std::uint32_t>(bits));
}

void put_backbone(ByteWriter& w, const QuantizedModel& m) {
    put(w, m.input);
    put(w, m.stem);
    for (double v : m.dw_scale) w.f64(v);
    for (auto v : m.dw_kernel) w.u8(static_cast<std::uint8_t>(v));
    for (auto v : m.dw_bias) w.i32(v);
    for (const auto& p : m.stem_pos) put(w, p);
    put(w, m.stem_silu);
    put(w, m.stem_out);
    put(w, m.exp_lut);
    for (const auto& b : m.blocks) {
        put(w, b.temporal);
        put(w, b.res_t);
        put(w, b.spectral);
        put(w, b.res_s);
        put(w, b.gate);
        for (const auto& p : b.gate_pos) put(w, p);
        put(w, b.gate_silu);
        put(w, b.gate_out);
        put(w, b.up);
        put(w, b.hidden);
        put(w, b.down);
        put(w, b.res_f);
    }
    put(w, m.latent);
    w.u32(static_cast<std::uint32_t>(m.tap_scales.size()));
    for (const auto& s : m.tap_scales) put(w, s);
}

void put_head(ByteWriter& w, const QuantizedModel& m) {
    put(w, m.head);
    put(w, m.abstain);
}

}  // namespace

std::vector<std::uint8_t> QuantizedModel::backbone_bytes() const {
    ByteWriter w;
    put_config(w, config, bits);
    put_backbone(w, *this);
    return w.take();
}

std::vector<std::uint8_t> QuantizedModel::head_bytes() const {
    ByteWriter w;
    put_head(w, *this);
    return w.take();
}

std::vector<std::uint8_t> QuantizedModel::serialize() const {
    ByteWriter w;
    w.tag("ZKQM");
    w.u32(kVersion);
    put_config(w, config, bits);
    put_backbone(w, *this);
    put_head(w, *this);
    w.u32(static_cast<std::uint32_t>(report.luts.size()));
    for (const auto& l : report.luts) {
        w.str(l.name);
        w.f64(l.max_error);
        w.f64(l.output_range);
    }
    w.f64(report.argmax_agreement);
    w.f64(report.logit_error_bound);
    w.u64(report.calibration_saturations);
    return w.take();
}

QuantizedModel QuantizedModel::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("ZKQM");
    if (r.u32() != kVersion) throw FormatError("unsupported model version");
    QuantizedModel m;
    auto& c = m.config;
    for (std::size_t* f : {&c.frames, &c.subcarriers, &c.d0, &c.n_blocks, &c.d_lat, &c.w_t, &c.group, &c.n_classes}) {
        *f = r.u32();
    }
    m.bits = static_cast<int>(r.u32());
    try {
        c.validate();
    } catch (const ParameterError& e) {
        throw FormatError(std::string("bad model config: ") + e.what());
    }
    if (m.bits < 4 || m.bits > 8) throw FormatError("bad quantizer bit width");
    if (c.frames > 4096 || c.subcarriers > 4096 || c.d_lat > kMaxWidth || c.n_classes > kMaxWidth) {
        throw FormatError("model dimensions out of range");
    }
    const std::size_t d = c.d0;
    m.input = get_act_scale(r);
    m.stem = get_linear(r);
    for (std::size_t i = 0; i < d; ++i) m.dw_scale.push_back(positive(r));
    for (auto b : r.raw(d * 9)) m.dw_kernel.push_back(static_cast<std::int8_t>(b));
    for (std::size_t i = 0; i < d; ++i) m.dw_bias.push_back(r.i32());
    for (std::size_t i = 0; i < d; ++i) m.stem_pos.push_back(get_lut_input(r));
    m.stem_silu = get_lut(r);
    m.stem_out = get_out_map(r);
    m.exp_lut = get_lut(r);
    for (std::size_t i = 0; i < c.n_blocks; ++i) {
        QBlock b;
        b.temporal = get_attention(r);
        b.res_t = get_residual(r);
        b.spectral = get_attention(r);
        b.res_s = get_residual(r);
        b.gate = get_linear(r);
        for (std::size_t k = 0; k < b.gate.out; ++k) b.gate_pos.push_back(get_lut_input(r));
        b.gate_silu = get_lut(r);
        b.gate_out = get_out_map(r);
        b.up = get_linear(r);
        b.hidden = get_out_map(r);
        b.down = get_linear(r);
        b.res_f = get_residual(r);
        m.blocks.push_back(std::move(b));
    }
    m.latent = get_linear(r);
    const std::size_t n_taps = r.count(4);
    if (n_taps != tap_count(c.n_blocks)) throw FormatError("tap table size mismatch");
    for (std::size_t i = 0; i < n_taps; ++i) m.tap_scales.push_back(get_act_scale(r));
    m.head = get_linear(r);
    m.abstain = get_linear(r);
    const std::size_t n_luts = r.count(20);
    for (std::size_t i = 0; i < n_luts; ++i) {
        LutReport l;
        l.name = r.str();
        l.max_error = r.f64();
        l.output_range = r.f64();
        m.report.luts.push_back(std::move(l));
    }
    m.report.argmax_agreement = r.f64();
    m.report.logit_error_bound = r.f64();
    m.report.calibration_saturations = r.u64();
    r.expect_end();

    // shapes must chain
    auto shape = [](const QLinear& l, std::size_t in, std::size_t out, bool mapped) {
        if (l.in != in || l.out != out || l.out_map.empty() == mapped) {
            throw FormatError("layer shape does not match the model config");
        }
    };
    auto width = [](std::size_t got, std::size_t want) {
        if (got != want) throw FormatError("channel table width mismatch");
    };
    width(m.input.channels(), 2);
    shape(m.stem, 2, d, true);
    width(m.stem_out.rq.size(), d);
    for (const auto& b : m.blocks) {
        for (const auto* a : {&b.temporal, &b.spectral}) {
            shape(a->q, d, d, true);
            shape(a->k, d, d, true);
            shape(a->v, d, d, true);
            shape(a->o, d, d, true);
        }
        for (const auto* res : {&b.res_t, &b.res_s, &b.res_f}) width(res->ra.size(), d);
        shape(b.gate, d, c.d_ff(), false);
        width(b.gate_out.rq.size(), c.d_ff());
        shape(b.up, d, c.d_ff(), true);
        width(b.hidden.rq.size(), c.d_ff());
        shape(b.down, c.d_ff(), d, true);
    }
    shape(m.latent, d, c.d_lat, true);
    shape(m.head, c.d_lat, c.n_classes, false);
    shape(m.abstain, c.d_lat, 1, false);
    return m;
}

zkp::Fp QuantizedModel::model_hash() const { return zkp::hash_bytes(serialize(), zkp::Domain::model); }
zkp::Fp QuantizedModel::backbone_hash() const { return zkp::hash_bytes(backbone_bytes(), zkp::Domain::model); }
zkp::Fp QuantizedModel::head_hash() const { return zkp::hash_bytes(head_bytes(), zkp::Domain::model); }

}  // namespace zks::encoder
