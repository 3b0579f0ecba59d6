#include "zks/pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "zks/calibrate/calibration.hpp"
#include "zks/calibrate/metrics.hpp"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/signal/dataset_io.hpp"

namespace zks::pipeline {
namespace {

using zkp::Fp;
using Clock = std::chrono::steady_clock;

Fp random_fp(Rng& rng) {
    std::uint64_t v;
    do {
        v = rng.next_u64();
    } while (v >= Fp::kModulus);
    return Fp(v);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

policy::PolicyTree default_tree(std::size_t n_classes) {
    using policy::Decision;
    using policy::Node;
    using policy::Predicate;
    std::vector<Node> nodes(7);
    nodes[0].predicate = Predicate::flag_is(0, true);
    nodes[0].if_true = 1;
    nodes[0].if_false = 4;
    nodes[1].predicate = Predicate::class_is(0);
    nodes[1].if_true = 2;
    nodes[1].if_false = 3;
    nodes[2].decision = Decision::allow;
    nodes[2].basis = {"armed", "empty_room"};
    nodes[3].decision = Decision::alarm;
    nodes[3].basis = {"armed", "motion"};
    nodes[4].predicate = Predicate::confidence_at_least(0.875);
    nodes[4].if_true = 5;
    nodes[4].if_false = 6;
    nodes[5].decision = Decision::allow;
    nodes[5].basis = {"disarmed", "confident"};
    nodes[6].decision = Decision::deny;
    nodes[6].basis = {"disarmed", "uncertain"};
    return policy::PolicyTree(std::move(nodes), n_classes);
}

calibrate::CalibrationProfile calibrate_model(const encoder::QuantizedModel& qm,
                                              std::span<const signal::Window> calib, std::string dataset_checksum,
                                              double lambda) {
    if (calib.empty()) throw ParameterError("calibration split is empty");
    const auto k = qm.config.n_classes;
    encoder::Matrix logits(calib.size(), k);
    std::vector<int> labels(calib.size());
    std::vector<int> preds(calib.size());
    std::vector<std::int64_t> margins(calib.size());
    for (std::size_t i = 0; i < calib.size(); ++i) {
        const auto out = encoder::forward_quantized(qm, calib[i]);
        for (std::size_t c = 0; c < k; ++c) logits(i, c) = static_cast<double>(out.logits[c]) * qm.logit_scale();
        labels[i] = calib[i].label();
        preds[i] = static_cast<int>(out.top);
        margins[i] = out.margin;
    }
    const double t = calibrate::fit_temperature(logits, labels);
    const auto table = encoder::ConfidenceTable::build(qm.logit_scale(), t, k);
    std::vector<double> u(calib.size());
    for (std::size_t i = 0; i < calib.size(); ++i) {
        u[i] = static_cast<double>(table.lookup(margins[i])) / encoder::ConfidenceTable::kScale;
    }
    const auto sel = calibrate::select_threshold(u, preds, labels, k, lambda);
    return calibrate::CalibrationProfile(t, sel.tau, std::move(dataset_checksum), qm.model_hash(), lambda);
}

ReferenceConfig ReferenceConfig::standard() {
    ReferenceConfig c;
    c.data.frames = 64;
    c.data.subcarriers = 16;
    c.data.n_classes = 5;
    c.data.n_windows = 600;
    c.data.snr_db = 20.0;
    c.model.frames = 64;
    c.model.subcarriers = 16;
    c.model.n_classes = 5;
    return c;
}

TrainedReference train_reference(const ReferenceConfig& cfg) {
    if (cfg.n_train + cfg.n_calib > cfg.data.n_windows) throw ParameterError("splits exceed the dataset");
    auto all = signal::generate_dataset(cfg.data);
    const auto train_end = all.begin() + static_cast<std::ptrdiff_t>(cfg.n_train);
    const auto calib_end = train_end + static_cast<std::ptrdiff_t>(cfg.n_calib);
    std::vector<signal::Window> raw_train(all.begin(), train_end);
    std::vector<signal::Window> raw_calib(train_end, calib_end);
    std::vector<signal::Window> raw_test(calib_end, all.end());

    const auto stats = signal::compute_stats(raw_train);
    auto standardized = [&](const std::vector<signal::Window>& ws) {
        std::vector<signal::Window> out;
        out.reserve(ws.size());
        for (const auto& w : ws) out.push_back(signal::standardize(w, stats));
        return out;
    };
    const auto train = standardized(raw_train);
    const auto calib = standardized(raw_calib);

    auto fm = encoder::FloatModel::random(cfg.model, cfg.model_seed);
    encoder::fit_affine(fm, std::span(train).subspan(0, std::min<std::size_t>(32, train.size())));
    encoder::train_head(fm, train, cfg.train);
    auto qm = encoder::quantize_model(fm, calib);
    auto profile = calibrate_model(qm, calib, signal::checksum_hex(signal::encode_split(raw_calib)), cfg.lambda);
    return TrainedReference{Artifacts{std::move(qm), std::move(profile), default_tree(cfg.model.n_classes), stats},
                            std::move(fm), std::move(raw_train), std::move(raw_calib), std::move(raw_test)};
}

Device::Device(Artifacts artifacts, DeviceOptions options)
    : artifacts_(std::move(artifacts)),
      options_(std::move(options)),
      table_(encoder::ConfidenceTable::build(artifacts_.model.logit_scale(), artifacts_.profile.temperature(),
                                             artifacts_.model.config.n_classes)),
      circuit_(std::make_shared<const zkp::Circuit>(
          zkp::Circuit::from_model(artifacts_.model, artifacts_.profile, artifacts_.tree))) {
    if (options_.flag_mask >> zkp::kFlagBits) throw ParameterError("flag mask exceeds the committed flag word");
}

Observation Device::observe(const signal::Window& raw) const {
    const auto w = signal::standardize(raw, artifacts_.stats);
    const auto out = encoder::forward_quantized(artifacts_.model, w, &table_);

    Rng rng(derive_seed(options_.seed, raw.t_win()));
    Observation obs;
    obs.t_win = raw.t_win();
    obs.label = raw.label();
    obs.top = out.top;
    obs.u_q = out.u_q;

    policy::Context ctx;
    ctx.zone = raw.zone().empty() ? options_.zone : raw.zone();
    ctx.target = options_.target;
    ctx.flags = static_cast<std::uint32_t>(rng.next_u64()) & options_.flag_mask;
    obs.action = policy::decide(out.logits, out.u_q, artifacts_.profile, ctx, artifacts_.tree);

    obs.witness.latent = out.latent;
    obs.witness.flags = ctx.flags;
    obs.witness.r = random_fp(rng);

    auto& s = obs.statement;
    s.c = zkp::commit_latent(obs.witness.latent, obs.witness.r, obs.witness.flags, artifacts_.model.bits);
    s.h_theta = artifacts_.model.model_hash();
    s.tau_q = artifacts_.profile.tau_q();
    s.t_win = obs.t_win;
    s.nonce = random_fp(rng);
    s.action = obs.action.decision;
    return obs;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    const std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

audit::AuditFields audit_fields(const Observation& obs, const std::string& site_id, std::int64_t ts,
                                std::size_t pi_size) {
    audit::AuditFields f;
    f.ts = ts;
    f.site_id = site_id;
    f.zone = obs.action.zone;
    f.action = obs.action;
    f.u = static_cast<double>(obs.u_q) / encoder::ConfidenceTable::kScale;
    f.c = obs.statement.c;
    f.h_theta = obs.statement.h_theta;
    f.t_win = obs.t_win;
    f.pi_size = pi_size;
    return f;
}

RunResult run(const Device& device, const zkp::Registry& registry, std::span<const signal::Window> raw,
              const RunOptions& options, audit::AuditLog* log) {
    if (options.batch == 0) throw ParameterError("batch size must be at least 1");
    // Fail before any proving when the device's model is not registered.
    const auto h = device.artifacts().model.model_hash();
    if (!registry.find(h)) throw RegistryError("unregistered model " + h.to_hex());

    RunResult result;
    result.observations.resize(raw.size());
    parallel_for(raw.size(), options.threads, [&](std::size_t i) { result.observations[i] = device.observe(raw[i]); });

    const auto n_batches = (raw.size() + options.batch - 1) / options.batch;
    result.batches.resize(n_batches);
    parallel_for(n_batches, options.threads, [&](std::size_t b) {
        const auto lo = b * options.batch;
        const auto hi = std::min(raw.size(), lo + options.batch);
        auto& rec = result.batches[b];
        std::vector<zkp::WitnessInput> inputs;
        for (std::size_t i = lo; i < hi; ++i) {
            rec.statements.push_back(result.observations[i].statement);
            inputs.push_back(result.observations[i].witness);
        }
        const zkp::ProveParams params{options.openings, derive_seed(options.seed, rec.statements.front().t_win)};
        auto t0 = Clock::now();
        rec.proof = zkp::prove_batch(device.circuit(), rec.statements, inputs, params, &rec.stats);
        rec.prove_seconds = seconds_since(t0);
        rec.bytes = zkp::serialize_proof(rec.statements, rec.proof).size();
        t0 = Clock::now();
        rec.verdict = zkp::verify_registered(registry, rec.statements, rec.proof);
        rec.verify_seconds = seconds_since(t0);
    });

    auto& s = result.summary;
    s.windows = raw.size();
    s.batches = n_batches;
    s.c4_per_window = device.circuit().c4_constraints();
    for (std::size_t b = 0; b < n_batches; ++b) {
        const auto& rec = result.batches[b];
        const auto lo = b * options.batch;
        for (std::size_t j = 0; j < rec.statements.size(); ++j) {
            const auto& obs = result.observations[lo + j];
            if (log) {
                const auto ts = options.clock ? options.clock(obs.t_win) : static_cast<std::int64_t>(obs.t_win) * 1000;
                log->append(audit_fields(obs, device.options().site_id, ts, rec.bytes));
            }
            if (obs.statement.abstains()) {
                ++s.abstained;
            } else {
                ++s.decided;
                if (static_cast<int>(obs.top) == obs.label) ++s.decided_correct;
            }
            if (rec.verdict.accepted) ++s.accepted_windows;
        }
        if (rec.verdict.accepted) ++s.accepted_batches;
        s.c4_instances += rec.stats.c4_instances;
        s.constraint_instances += rec.stats.constraint_instances;
        s.prove_seconds += rec.prove_seconds;
        s.verify_seconds += rec.verify_seconds;
        s.proof_bytes += rec.bytes;
    }
    s.coverage = ratio(s.decided, s.windows);
    s.abstain_rate = ratio(s.abstained, s.windows);
    s.risk = s.decided == 0 ? 0.0 : 1.0 - ratio(s.decided_correct, s.decided);
    s.acceptance_rate = ratio(s.accepted_windows, s.windows);
    if (s.windows > 0) {
        s.amortized = {s.prove_seconds / static_cast<double>(s.windows),
                       static_cast<double>(s.proof_bytes) / static_cast<double>(s.windows)};
    }
    return result;
}

std::string RunSummary::to_json() const {
    const nlohmann::json j = {{"windows", windows},
                              {"decided", decided},
                              {"abstained", abstained},
                              {"decided_correct", decided_correct},
                              {"accepted_windows", accepted_windows},
                              {"batches", batches},
                              {"accepted_batches", accepted_batches},
                              {"coverage", coverage},
                              {"risk", risk},
                              {"abstain_rate", abstain_rate},
                              {"acceptance_rate", acceptance_rate},
                              {"c4_per_window", c4_per_window},
                              {"c4_instances", c4_instances},
                              {"constraint_instances", constraint_instances},
                              {"prove_seconds", prove_seconds},
                              {"verify_seconds", verify_seconds},
                              {"proof_bytes", proof_bytes},
                              {"seconds_per_window", amortized.seconds_per_window},
                              {"bytes_per_window", amortized.bytes_per_window}};
    return j.dump(2);
}

LogSummary summarize_log(std::span<const std::string> lines) {
    LogSummary s;
    for (const auto& line : lines) {
        const auto e = audit::AuditEntry::parse(line);
        ++s.windows;
        if (e.fields.action.decision == policy::Decision::abstain) {
            ++s.abstained;
        } else {
            ++s.decided;
        }
    }
    s.coverage = ratio(s.decided, s.windows);
    s.abstain_rate = ratio(s.abstained, s.windows);
    return s;
}

}  // namespace zks::pipeline
