// Acceptance suite: trains the reference model, then checks each criterion
// and prints one PASS or FAIL line per criterion. Exit status is 0 only when
// all of them pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "zks/audit/attacks.hpp"
#include "zks/audit/log.hpp"
#include "zks/calibrate/calibration.hpp"
#include "zks/calibrate/metrics.hpp"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"
#include "zks/encoder/losses.hpp"
#include "zks/encoder/tensor_ops.hpp"
#include "zks/pipeline/pipeline.hpp"
#include "zks/pipeline/report.hpp"
#include "zks/policy/compile.hpp"
#include "zks/signal/augment.hpp"
#include "zks/signal/dataset.hpp"
#include "zks/zkp/proof.hpp"

namespace fs = std::filesystem;
using namespace zks;
using encoder::Matrix;
using Clock = std::chrono::steady_clock;

namespace {

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream o;
    o.precision(precision);
    o << v;
    return o.str();
}

struct Suite {
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    fs::path out;
    pipeline::ReferenceConfig config = pipeline::ReferenceConfig::standard();
    std::optional<pipeline::TrainedReference> ref;
    double train_seconds = 0.0;
    zkp::Registry registry;
    std::optional<pipeline::Device> device;

    // Produced by the completeness runs, consumed by replay and audit checks.
    std::vector<zkp::ProofBundle> archive;
    std::vector<signal::Window> pool;
    std::vector<std::string> log_lines;
    std::optional<audit::Anchor> anchor;
    audit::Signer signer = audit::Signer::from_seed(0);

    const pipeline::Artifacts& artifacts() const { return ref->artifacts; }
};

// ---------------------------------------------------------------- 1
Verdict completeness(Suite& s) {
    const auto t0 = Clock::now();
    // Fresh windows of the reference scene, past the ones used for training.
    auto spec = s.config.data;
    const std::size_t runs = 1000;
    spec.n_windows = s.config.data.n_windows + runs;
    auto all = signal::generate_dataset(spec);
    s.pool.assign(all.end() - static_cast<std::ptrdiff_t>(runs), all.end());

    Rng rng(derive_seed(s.seed, 0xC1));
    std::vector<pipeline::Device> devices;
    for (int d = 0; d < 10; ++d) {
        devices.emplace_back(s.artifacts(), pipeline::DeviceOptions{.site_id = "site-" + std::to_string(d),
                                                                    .zone = "zone-" + std::to_string(d % 3),
                                                                    .flag_mask = static_cast<std::uint32_t>(rng.below(16)),
                                                                    .seed = rng.next_u64()});
    }
    std::vector<std::size_t> pick(runs);
    for (auto& p : pick) p = rng.below(devices.size());

    std::vector<std::optional<pipeline::RunResult>> results(runs);
    pipeline::parallel_for(runs, s.threads, [&](std::size_t i) {
        pipeline::RunOptions opt;
        opt.seed = derive_seed(s.seed, i);
        results[i] = pipeline::run(devices[pick[i]], s.registry, std::span(&s.pool[i], 1), opt);
    });

    s.signer = audit::Signer::from_seed(derive_seed(s.seed, 0xA0));
    audit::AuditLog log(s.signer);
    std::size_t accepted = 0, decided = 0;
    for (std::size_t i = 0; i < runs; ++i) {
        const auto& r = *results[i];
        accepted += r.summary.accepted_windows;
        decided += r.summary.decided;
        const auto& b = r.batches.front();
        s.archive.push_back({b.statements, b.proof});
        const auto& o = r.observations.front();
        log.append(pipeline::audit_fields(o, devices[pick[i]].options().site_id,
                                          static_cast<std::int64_t>(o.t_win) * 1000, b.bytes));
    }
    s.log_lines = log.lines();
    s.anchor = log.anchor();
    const double seconds = since(t0);
    const double total = seconds + s.train_seconds;
    return {accepted == runs && decided > 0 && total < 300.0,
            std::to_string(accepted) + "/" + std::to_string(runs) + " accepted (" + std::to_string(decided) +
                " decided), " + fmt(seconds, 3) + " s for the runs, " + fmt(total, 3) + " s with training"};
}

// ---------------------------------------------------------------- 2
Verdict tamper_and_rollback(Suite& s) {
    const std::size_t trials = 1000;
    const auto tau_q = s.artifacts().profile.tau_q();
    auto older_cfg = s.config;
    older_cfg.model_seed = s.config.model_seed + 1;
    const auto older = pipeline::train_reference(older_cfg);
    if (older.artifacts.model.model_hash() == s.artifacts().model.model_hash()) {
        return {false, "older model hashes like the registered one"};
    }
    const auto& windows = s.ref->test;

    Rng rng(derive_seed(s.seed, 0xC2));
    std::vector<std::int64_t> tau_prime(trials);
    std::vector<std::size_t> wi(trials), wj(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        tau_prime[t] = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(tau_q)));
        wi[t] = rng.below(windows.size());
        wj[t] = rng.below(windows.size());
    }
    std::vector<audit::AttackOutcome> tamper(trials), rollback(trials);
    pipeline::parallel_for(trials, s.threads, [&](std::size_t t) {
        tamper[t] = audit::attack_tamper_threshold(s.artifacts(), s.registry, windows[wi[t]], tau_prime[t],
                                                   derive_seed(s.seed, 0x7A00 + t));
        rollback[t] = audit::attack_rollback(older.artifacts, s.registry, windows[wj[t]],
                                             derive_seed(s.seed, 0x7B00 + t));
    });
    audit::CampaignTally ta, ro;
    for (std::size_t t = 0; t < trials; ++t) {
        ta.add(tamper[t]);
        ro.add(rollback[t]);
    }
    auto reasons = [](const audit::CampaignTally& c) {
        std::string r;
        for (const auto& [k, v] : c.reasons) r += (r.empty() ? "" : ",") + k + "=" + std::to_string(v);
        return r;
    };
    return {ta.accepted == 0 && ro.accepted == 0 && ta.trials == trials && ro.trials == trials,
            "tamper " + std::to_string(ta.accepted) + "/" + std::to_string(trials) + " accepted [" + reasons(ta) +
                "], rollback " + std::to_string(ro.accepted) + "/" + std::to_string(trials) + " accepted [" +
                reasons(ro) + "]"};
}

// ---------------------------------------------------------------- 3
Verdict replay(Suite& s) {
    if (s.archive.size() < 1000) return {false, "no archived bundles"};
    audit::CampaignTally tally;
    for (std::size_t i = 0; i < 1000; ++i) {
        // Windows far past anything archived.
        tally.add(audit::attack_replay(s.registry, s.archive[i], 1'000'000 + 10 * i, derive_seed(s.seed, 0x3E00 + i)));
    }
    std::string r;
    for (const auto& [k, v] : tally.reasons) r += (r.empty() ? "" : ",") + k + "=" + std::to_string(v);
    return {tally.accepted == 0 && tally.trials == 1000, std::to_string(tally.accepted) + "/1000 accepted [" + r + "]"};
}

// ---------------------------------------------------------------- 4

// Central 99% interval of Binomial(n, q).
std::pair<int, int> binomial_interval(int n, double q) {
    double cdf = 0.0, pmf = std::pow(1.0 - q, n);
    int lo = -1;
    for (int x = 0; x <= n; ++x) {
        cdf += pmf;
        if (lo < 0 && cdf >= 0.005) lo = x;
        if (cdf >= 0.995) return {lo, x};
        pmf *= (static_cast<double>(n - x) / (x + 1)) * (q / (1.0 - q));
    }
    return {std::max(lo, 0), n};
}

Verdict spot_check(Suite& s) {
    const auto& circuit = s.device->circuit();
    std::optional<pipeline::Observation> obs;
    for (const auto& w : s.ref->test) {
        auto o = s.device->observe(w);
        if (!o.statement.abstains()) {
            obs = std::move(o);
            break;
        }
    }
    if (!obs) return {false, "no deciding window in the test split"};
    const auto wit = circuit.witness(obs->statement, obs->witness);
    const auto& honest = circuit.system(true);
    if (!honest.is_satisfied(wit)) return {false, "honest witness does not satisfy the circuit"};
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < honest.size(); ++i) {
        if (!honest.constraints[i].binding) pool.push_back(i);
    }
    const std::size_t m = pool.size();
    const auto k = zkp::default_openings(m);
    const double analytic_miss = std::pow(1.0 - 1.0 / static_cast<double>(m), static_cast<double>(k));

    const int trials = 1000;
    Rng rng(derive_seed(s.seed, 0xC4));
    std::vector<std::size_t> target(trials);
    std::vector<std::uint64_t> salts(trials);
    for (int i = 0; i < trials; ++i) {
        target[i] = pool[rng.below(m)];
        salts[i] = rng.next_u64();
    }
    std::vector<int> rejected(trials, 0), wrong_reason(trials, 0), not_violated(trials, 0);
    const std::vector<std::vector<zkp::Fp>> ws = {wit};
    pipeline::parallel_for(static_cast<std::size_t>(trials), s.threads, [&](std::size_t i) {
        auto cs = honest;
        cs.constraints[target[i]].c.add_constant(zkp::Fp::one());
        if (!cs.first_unsatisfied(wit)) {
            not_violated[i] = 1;
            return;
        }
        const auto proof = zkp::commit_and_open(cs, std::span(&obs->statement, 1), ws, k, salts[i]);
        const auto r = zkp::verify_system(cs, std::span(&obs->statement, 1), proof);
        if (!r.accepted) {
            rejected[i] = 1;
            wrong_reason[i] = r.reason != zkp::Reject::bad_constraint;
        }
    });
    const int rej = std::accumulate(rejected.begin(), rejected.end(), 0);
    const int bad_reason = std::accumulate(wrong_reason.begin(), wrong_reason.end(), 0);
    const int unviolated = std::accumulate(not_violated.begin(), not_violated.end(), 0);
    const auto [lo, hi] = binomial_interval(trials, analytic_miss);
    const int misses = trials - rej;
    const double rate = static_cast<double>(rej) / trials;
    const bool pass = unviolated == 0 && bad_reason == 0 && rate >= 0.995 && misses >= lo && misses <= hi &&
                      std::abs(zkp::miss_probability(m, k) - analytic_miss) < 1e-12 && analytic_miss <= 1e-3;
    return {pass, "rejected " + std::to_string(rej) + "/" + std::to_string(trials) + " (m=" + std::to_string(m) +
                      ", k=" + std::to_string(k) + ", analytic reject " + fmt(1.0 - analytic_miss, 6) +
                      ", misses " + std::to_string(misses) + " in 99% interval [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "])"};
}

// ---------------------------------------------------------------- 5
Verdict amortization(Suite& s) {
    const std::size_t n = 64;
    std::vector<pipeline::Observation> obs(n);
    pipeline::parallel_for(n, s.threads, [&](std::size_t i) { obs[i] = s.device->observe(s.ref->test[i]); });
    const auto& circuit = s.device->circuit();
    const std::vector<std::size_t> sizes = {1, 4, 8, 16};
    std::vector<double> bytes, secs;
    for (const auto b : sizes) {
        double best = HUGE_VAL;
        std::size_t total_bytes = 0;
        // Proving runs on this thread alone; the best of three repetitions
        // damps scheduler noise.
        for (int rep = 0; rep < 3; ++rep) {
            double t = 0.0;
            total_bytes = 0;
            for (std::size_t lo = 0; lo < n; lo += b) {
                std::vector<zkp::Statement> st;
                std::vector<zkp::WitnessInput> in;
                for (std::size_t i = lo; i < lo + b; ++i) {
                    st.push_back(obs[i].statement);
                    in.push_back(obs[i].witness);
                }
                const auto t0 = Clock::now();
                zkp::ProveParams params;
                params.salt_seed = derive_seed(s.seed, lo);
                const auto proof = zkp::prove_batch(circuit, st, in, params);
                t += since(t0);
                if (!zkp::verify_batch(circuit, st, proof).accepted) throw ProverError("batch proof rejected");
                total_bytes += zkp::serialize_proof(st, proof).size();
            }
            best = std::min(best, t);
        }
        bytes.push_back(static_cast<double>(total_bytes) / n);
        secs.push_back(best / n);
    }
    bool pass = true;
    std::string d;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i > 0) pass = pass && bytes[i] < bytes[i - 1] && secs[i] < secs[i - 1];
        d += (i ? "; " : "") + std::string("B=") + std::to_string(sizes[i]) + ": " + fmt(bytes[i], 6) + " B, " +
             fmt(secs[i] * 1e3, 3) + " ms";
    }
    return {pass, d + " per window"};
}

// ---------------------------------------------------------------- 6
Verdict abstain_fast_path(Suite& s) {
    // Class blends are the least confident inputs the reference model sees.
    // The stress set interleaves every abstaining blend with as many
    // deciding ones, in window order.
    std::vector<signal::Window> raw = s.ref->train;
    raw.insert(raw.end(), s.ref->calib.begin(), s.ref->calib.end());
    raw.insert(raw.end(), s.ref->test.begin(), s.ref->test.end());
    const auto blends = pipeline::blend_classes(raw, 0.5, 5'000'000);
    std::vector<int> abstains(blends.size());
    pipeline::parallel_for(blends.size(), s.threads,
                           [&](std::size_t i) { abstains[i] = s.device->observe(blends[i]).statement.abstains(); });
    const auto n_abstain = static_cast<std::size_t>(std::count(abstains.begin(), abstains.end(), 1));
    std::vector<signal::Window> stress;
    std::size_t deciding = 0;
    for (std::size_t i = 0; i < blends.size(); ++i) {
        if (abstains[i] || deciding < n_abstain) {
            deciding += !abstains[i];
            stress.push_back(blends[i]);
        }
    }
    pipeline::RunOptions opt;
    opt.batch = 4;
    opt.threads = s.threads;
    const auto r = pipeline::run(*s.device, s.registry, stress, opt);
    const auto& m = r.summary;
    std::size_t c4 = 0;
    for (const auto& b : r.batches) c4 += b.stats.c4_instances;
    const auto& c = s.device->circuit();
    const bool pass = m.abstain_rate >= 0.30 && m.acceptance_rate == 1.0 && m.c4_per_window == c.c4_constraints() &&
                      m.c4_instances == m.decided * m.c4_per_window && c4 == m.c4_instances &&
                      m.constraint_instances == m.decided * c.system(true).size() + m.abstained * c.prefix_constraints();
    return {pass, std::to_string(m.windows) + " windows, abstain rate " + fmt(m.abstain_rate, 3) + " (" +
                      std::to_string(n_abstain) + " of " + std::to_string(blends.size()) +
                      " blends abstain), C4 instances " + std::to_string(m.c4_instances) + " = " +
                      std::to_string(m.decided) + " x " + std::to_string(m.c4_per_window)};
}

// ---------------------------------------------------------------- 7

double rel_error(std::span<const double> analytic, std::span<const double> numeric) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        num += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        den += numeric[i] * numeric[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

std::vector<double> central_diff(std::vector<double> x, const std::function<double(const std::vector<double>&)>& f,
                                 double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double up = f(x);
        x[i] = x0 - h;
        const double dn = f(x);
        x[i] = x0;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal() * scale;
    return v;
}

Verdict loss_gradients(Suite& s) {
    using namespace encoder;
    Rng rng(derive_seed(s.seed, 0xC7));
    double worst_msm = 0.0, worst_phase = 0.0, worst_nce = 0.0, worst_ce = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const auto a = random_vector(rng, 24);
        auto b = random_vector(rng, 24);
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (std::abs(b[i] - a[i]) < 1e-3) b[i] += 0.01;  // off the kink
        }
        std::vector<std::size_t> mask;
        for (std::size_t i = 0; i < 24; i += 1 + rng.below(3)) mask.push_back(i);
        worst_msm = std::max(worst_msm, rel_error(loss_msm(a, b, mask).grad, central_diff(b, [&](const auto& v) {
                                                      return loss_msm(a, v, mask).value;
                                                  })));
    }
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t T = 8, S = 3;
        const auto a = random_vector(rng, T * S * 2), b = random_vector(rng, T * S * 2);
        const auto r = loss_phase(a, b, T, S);
        worst_phase = std::max(
            {worst_phase, rel_error(r.grad_a, central_diff(a, [&](const auto& v) { return loss_phase(v, b, T, S).value; })),
             rel_error(r.grad_b, central_diff(b, [&](const auto& v) { return loss_phase(a, v, T, S).value; }))});
    }
    for (int inst = 0; inst < 100; ++inst) {
        const auto p = random_vector(rng, 8), t = random_vector(rng, 8);
        std::vector<std::vector<double>> negs;
        for (int j = 0; j < 4; ++j) negs.push_back(random_vector(rng, 8));
        const double tau = rng.uniform(0.2, 1.0);
        const auto r = loss_nce(p, t, negs, tau);
        worst_nce = std::max({worst_nce,
                              rel_error(r.grad_p, central_diff(p, [&](const auto& v) { return loss_nce(v, t, negs, tau).value; })),
                              rel_error(r.grad_t, central_diff(t, [&](const auto& v) { return loss_nce(p, v, negs, tau).value; }))});
        for (std::size_t j = 0; j < negs.size(); ++j) {
            worst_nce = std::max(worst_nce, rel_error(r.grad_neg[j], central_diff(negs[j], [&](const auto& v) {
                                                          auto ns = negs;
                                                          ns[j] = v;
                                                          return loss_nce(p, t, ns, tau).value;
                                                      })));
        }
    }
    for (int inst = 0; inst < 100; ++inst) {
        Matrix logits(12, 5);
        for (auto& v : logits.data) v = rng.normal() * 3.0;
        std::vector<int> y;
        for (std::size_t i = 0; i < 12; ++i) y.push_back(static_cast<int>(rng.below(5)));
        const double T = rng.uniform(0.3, 3.0);
        const std::vector<double> an = {loss_calibrated_ce(logits, y, T).grad_t};
        worst_ce = std::max(worst_ce, rel_error(an, central_diff({T}, [&](const auto& v) {
                                                    return loss_calibrated_ce(logits, y, v[0]).value;
                                                })));
    }
    const double worst = std::max({worst_msm, worst_phase, worst_nce, worst_ce});
    return {worst < 1e-4, "max relative error: msm " + fmt(worst_msm, 3) + ", phase " + fmt(worst_phase, 3) +
                              ", contrastive " + fmt(worst_nce, 3) + ", calibrated CE " + fmt(worst_ce, 3)};
}

// ---------------------------------------------------------------- 8

// Direct NLL at temperature t, independent of the calibration module.
double nll_oracle(const Matrix& l, std::span<const int> y, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.rows; ++i) {
        double mx = -HUGE_VAL;
        for (std::size_t j = 0; j < l.cols; ++j) mx = std::max(mx, l(i, j) / t);
        double z = 0.0;
        for (std::size_t j = 0; j < l.cols; ++j) z += std::exp(l(i, j) / t - mx);
        s += mx + std::log(z) - l(i, static_cast<std::size_t>(y[i])) / t;
    }
    return s / static_cast<double>(l.rows);
}

double f1_oracle(const std::vector<int>& pred, const std::vector<int>& lab, std::size_t k) {
    std::vector<std::vector<double>> cm(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < pred.size(); ++i) cm[lab[i]][pred[i]] += 1.0;
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        double col = 0.0, row = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            col += cm[j][c];
            row += cm[c][j];
        }
        const double tp = cm[c][c];
        const double prec = col > 0 ? tp / col : 0.0, rec = row > 0 ? tp / row : 0.0;
        total += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    }
    return total / static_cast<double>(k);
}

// Every distinct confidence (and zero) as a candidate; ties keep the lowest.
std::pair<double, double> scan_oracle(const std::vector<double>& u, const std::vector<int>& pred,
                                      const std::vector<int>& lab, std::size_t k, double lambda) {
    std::set<double> cands(u.begin(), u.end());
    cands.insert(0.0);
    double best_tau = 0.0, best = -HUGE_VAL;
    for (double tau : cands) {
        std::vector<int> p, l;
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (u[i] >= tau) {
                p.push_back(pred[i]);
                l.push_back(lab[i]);
                wrong += pred[i] != lab[i];
            }
        }
        const double util =
            p.empty() ? 0.0 : f1_oracle(p, l, k) - lambda * static_cast<double>(wrong) / static_cast<double>(p.size());
        if (util > best + 1e-12) {
            best = util;
            best_tau = tau;
        }
    }
    return {best_tau, best};
}

Verdict calibration_oracles(Suite& s) {
    Rng rng(derive_seed(s.seed, 0xC8));
    double worst_gap = 0.0;
    int temp_fail = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 50 + rng.below(150), k = 2 + rng.below(5);
        Matrix l(n, k);
        const double spread = std::exp(rng.uniform(-1.0, 2.0));
        std::vector<int> y;
        for (std::size_t i = 0; i < n; ++i) {
            // labels follow the logits with some noise, so the optimum is interior
            std::size_t arg = 0;
            for (std::size_t j = 0; j < k; ++j) {
                l(i, j) = rng.normal() * spread;
                if (l(i, j) > l(i, arg)) arg = j;
            }
            y.push_back(rng.uniform() < 0.6 ? static_cast<int>(arg) : static_cast<int>(rng.below(k)));
        }
        const double fitted = nll_oracle(l, y, calibrate::fit_temperature(l, y));
        // 1000-point grid over log T in [-3, 3], then golden-section refinement
        // around the best point; NLL is unimodal in log T.
        double best_lt = 0.0, best = HUGE_VAL;
        for (int i = 0; i < 1000; ++i) {
            const double lt = -3.0 + 6.0 * i / 999.0;
            const double f = nll_oracle(l, y, std::exp(lt));
            if (f < best) {
                best = f;
                best_lt = lt;
            }
        }
        double a = best_lt - 6.0 / 999.0, b = best_lt + 6.0 / 999.0;
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int it = 0; it < 200; ++it) {
            const double c = b - g * (b - a), d = a + g * (b - a);
            if (nll_oracle(l, y, std::exp(c)) < nll_oracle(l, y, std::exp(d))) b = d;
            else a = c;
        }
        const double refined = std::min(best, nll_oracle(l, y, std::exp((a + b) / 2.0)));
        worst_gap = std::max(worst_gap, std::abs(fitted - refined));
        temp_fail += fitted > best + 1e-8 || std::abs(fitted - refined) >= 1e-8;
    }

    int scan_fail = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 100 + rng.below(400), k = 2 + rng.below(5);
        const double lambda = inst % 5 == 0 ? 0.0 : rng.uniform(0.0, 2.0);
        std::vector<double> u;
        std::vector<int> p, l;
        for (std::size_t i = 0; i < n; ++i) {
            u.push_back(std::floor(rng.uniform() * 64.0) / 64.0);  // coarse, to force ties
            l.push_back(static_cast<int>(rng.below(k)));
            p.push_back(rng.uniform() < u.back() ? l.back() : static_cast<int>(rng.below(k)));
        }
        const auto sel = calibrate::select_threshold(u, p, l, k, lambda);
        const auto [tau, util] = scan_oracle(u, p, l, k, lambda);
        scan_fail += sel.tau != tau || std::abs(sel.utility - util) > 1e-12;
    }

    // ECE hand cases: perfect, always wrong, and two bins 0.3/40% and 0.9/80%.
    int ece_fail = 0;
    const std::vector<double> ones(8, 1.0);
    ece_fail += calibrate::ece(ones, std::vector<bool>(8, true)) != 0.0;
    ece_fail += calibrate::ece(ones, std::vector<bool>(8, false)) != 1.0;
    std::vector<double> conf;
    std::vector<bool> ok;
    for (int i = 0; i < 10; ++i) {
        conf.push_back(0.3);
        ok.push_back(i < 4);
    }
    for (int i = 0; i < 10; ++i) {
        conf.push_back(0.9);
        ok.push_back(i < 8);
    }
    ece_fail += std::abs(calibrate::ece(conf, ok) - 0.10) > 1e-12;
    // one bin of 0.5 confidences at 50% accuracy
    ece_fail += calibrate::ece(std::vector<double>(4, 0.5), {true, false, true, false}) != 0.0;

    return {temp_fail == 0 && scan_fail == 0 && ece_fail == 0,
            "temperature: " + std::to_string(100 - temp_fail) + "/100 (max |dNLL| " + fmt(worst_gap, 3) +
                "), threshold scan: " + std::to_string(100 - scan_fail) + "/100, ECE hand cases: " +
                std::to_string(4 - ece_fail) + "/4"};
}

// ---------------------------------------------------------------- 9
Verdict quantization_fidelity(Suite& s) {
    using namespace encoder;
    const auto& qm = s.artifacts().model;
    const auto& fm = s.ref->float_model;
    std::vector<signal::Window> calib;
    for (const auto& w : s.ref->calib) calib.push_back(signal::standardize(w, s.artifacts().stats));

    double worst_reported = 0.0;
    for (const auto& l : qm.report.luts) worst_reported = std::max(worst_reported, l.relative());

    // Independent pass: table error against SiLU over every float activation
    // that feeds a table, relative to the observed output range.
    const std::size_t n_tables = 1 + qm.blocks.size();
    std::vector<double> max_err(n_tables, 0.0), lo(n_tables, HUGE_VAL), hi(n_tables, -HUGE_VAL);
    std::size_t agree = 0;
    for (const auto& w : calib) {
        const auto fl = forward(fm, w, [&](int tap, std::span<const double> v) {
            const Lut* lut = nullptr;
            std::size_t slot = 0;
            if (tap == tap_index(Tap::conv)) lut = &qm.stem_silu;
            for (std::size_t b = 0; b < qm.blocks.size(); ++b) {
                if (tap == tap_index(Tap::gate, b)) {
                    lut = &qm.blocks[b].gate_silu;
                    slot = 1 + b;
                }
            }
            if (!lut) return;
            for (double x : v) {
                max_err[slot] = std::max(max_err[slot], std::abs(lut->eval(x) - silu(x)));
                lo[slot] = std::min(lo[slot], silu(x));
                hi[slot] = std::max(hi[slot], silu(x));
            }
        });
        agree += forward_quantized(qm, w).top == argmax(fl.logits);
    }
    double worst_measured = 0.0;
    for (std::size_t t = 0; t < n_tables; ++t) worst_measured = std::max(worst_measured, max_err[t] / (hi[t] - lo[t]));
    const double agreement = static_cast<double>(agree) / static_cast<double>(calib.size());
    return {worst_reported <= 0.01 && worst_measured <= 0.01 && agreement >= 0.98,
            std::to_string(qm.report.luts.size()) + " tables, max error " + fmt(100 * worst_reported, 3) +
                "% of range (re-measured " + fmt(100 * worst_measured, 3) + "%), argmax agreement " +
                fmt(agreement, 4) + " on " + std::to_string(calib.size()) + " calibration windows"};
}

// ---------------------------------------------------------------- 10

policy::PolicyTree random_tree(Rng& rng, std::size_t k, std::size_t max_depth = 6) {
    using namespace policy;
    std::vector<Node> nodes;
    const std::function<std::uint32_t(std::size_t)> grow = [&](std::size_t depth) -> std::uint32_t {
        const auto idx = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();
        if (depth == max_depth || rng.uniform() < 0.3) {
            nodes[idx].decision = static_cast<Decision>(rng.below(kDecisionCount));
            nodes[idx].basis = {"leaf" + std::to_string(idx)};
            return idx;
        }
        switch (rng.below(3)) {
            case 0: nodes[idx].predicate = Predicate::class_is(static_cast<std::uint32_t>(rng.below(k))); break;
            case 1:
                nodes[idx].predicate = Predicate::confidence_at_least(static_cast<double>(rng.below(129)) / 128.0);
                break;
            default:
                nodes[idx].predicate = Predicate::flag_is(static_cast<std::uint32_t>(rng.below(4)), rng.below(2) == 1);
        }
        const auto t = grow(depth + 1);
        const auto f = grow(depth + 1);
        nodes[idx].if_true = t;
        nodes[idx].if_false = f;
        return idx;
    };
    grow(0);
    return PolicyTree(std::move(nodes), k);
}

// Recursive walk with integer comparisons, the abstain rule first.
std::pair<policy::Decision, std::vector<std::string>> interpret(const policy::PolicyTree& tree, std::size_t arg,
                                                                std::int64_t u_q, std::int64_t tau_q,
                                                                std::uint32_t flags) {
    using namespace policy;
    if (u_q < tau_q) return {Decision::abstain, {"low_confidence"}};
    std::size_t i = 0;
    for (;;) {
        const Node& n = tree.nodes()[i];
        if (!n.predicate) return {n.decision, n.basis};
        const Predicate& p = *n.predicate;
        bool yes = false;
        if (p.kind == Predicate::Kind::class_is) yes = arg == p.class_id;
        if (p.kind == Predicate::Kind::confidence_at_least) yes = u_q >= static_cast<std::int64_t>(p.threshold * 128.0);
        if (p.kind == Predicate::Kind::flag_is) yes = (((flags >> p.flag) & 1u) == 1u) == p.flag_value;
        i = yes ? n.if_true : n.if_false;
    }
}

Verdict policy_equivalence(Suite& s) {
    const std::size_t k = 5;
    Rng rng(derive_seed(s.seed, 0xCA));
    int mismatch = 0, dominance = 0, abstained = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto tree = random_tree(rng, k);
        const auto compiled = policy::compile_tree(tree);
        std::vector<std::int64_t> logits;
        for (std::size_t c = 0; c < k; ++c) logits.push_back(static_cast<std::int64_t>(rng.below(9)) - 4);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (logits[c] > logits[arg]) arg = c;
        }
        const auto u_q = static_cast<std::int32_t>(rng.below(129));
        const auto flags = static_cast<std::uint32_t>(rng.below(16));
        const double tau = static_cast<double>(rng.below(129)) / 128.0;
        const calibrate::CalibrationProfile prof(1.0, tau, "random", zkp::Fp(7));
        const policy::Context ctx{"zone", "door", flags};

        // Compiled fragments implement the tree below the threshold rule.
        const auto& frag = compiled.select(arg, u_q, flags);
        const auto [want_d, want_b] = interpret(tree, arg, u_q, -1, flags);
        mismatch += frag.decision != want_d || frag.basis != want_b;

        const auto got = policy::decide(logits, u_q, prof, ctx, tree);
        const auto [full_d, full_b] = interpret(tree, arg, u_q, prof.tau_q(), flags);
        mismatch += got.decision != full_d || got.basis != full_b;
        abstained += got.decision == policy::Decision::abstain;

        if (prof.tau_q() > 0) {
            const auto low = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(prof.tau_q())));
            dominance += policy::decide(logits, low, prof, ctx, tree).decision != policy::Decision::abstain;
        }
    }

    // The same agreement inside the reference circuit: the honest action
    // satisfies the decision constraints and every other action breaks them.
    const auto& c = s.device->circuit();
    int circuit_fail = 0, deciding = 0;
    for (std::size_t i = 0; i < 100; ++i) {
        const auto o = s.device->observe(s.ref->test[i]);
        if (o.statement.abstains()) {
            circuit_fail += o.u_q >= s.artifacts().profile.tau_q();
            continue;
        }
        ++deciding;
        const auto wit = c.witness(o.statement, o.witness);
        circuit_fail += !c.system(true).is_satisfied(wit);
        for (std::size_t a = 0; a < policy::kDecisionCount; ++a) {
            if (a == static_cast<std::size_t>(o.statement.action)) continue;
            auto bad = wit;
            bad[zkp::kPublicSlots[5]] = zkp::Fp(a);
            circuit_fail += c.system(true).is_satisfied(bad);
        }
    }
    return {mismatch == 0 && dominance == 0 && circuit_fail == 0 && abstained > 0 && deciding > 0,
            "10000 random trees: " + std::to_string(mismatch) + " mismatches, " + std::to_string(dominance) +
                " dominance violations; reference circuit: " + std::to_string(circuit_fail) + " failures over " +
                std::to_string(deciding) + " deciding windows"};
}

// ---------------------------------------------------------------- 11
Verdict coverage_risk(Suite& s) {
    Rng rng(derive_seed(s.seed, 0xCB));
    int non_monotone = 0;
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<double> u;
        std::vector<bool> ok;
        for (int i = 0; i < 200; ++i) {
            u.push_back(std::floor(rng.uniform() * 40.0) / 40.0);
            ok.push_back(rng.uniform() < 0.7);
        }
        double prev = 2.0;
        for (int j = 0; j <= 128; ++j) {
            const double cov = calibrate::coverage_risk(u, ok, j / 128.0).coverage;
            non_monotone += cov > prev;
            prev = cov;
        }
    }

    // Held-out and shifted splits, as the command line emits them.
    std::vector<signal::Window> shifted;
    for (const auto& w : s.ref->test) {
        shifted.push_back(signal::perturb(w, signal::PerturbKind::jamming, 0.5, derive_seed(s.seed, 0x5348 + w.t_win())));
    }
    std::vector<pipeline::CurveSeries> series;
    series.push_back(pipeline::grid_curve("test", pipeline::score_split(*s.device, s.ref->test, s.threads)));
    series.push_back(pipeline::grid_curve("shifted", pipeline::score_split(*s.device, shifted, s.threads)));
    for (const auto& c : series) {
        for (std::size_t j = 1; j < c.points.size(); ++j) non_monotone += c.points[j].coverage > c.points[j - 1].coverage;
    }
    fs::create_directories(s.out / "reports");
    const auto csv = s.out / "reports" / "cr_curves.csv", svg = s.out / "reports" / "cr_curves.svg";
    std::ofstream(csv) << pipeline::curves_csv(series);
    std::ofstream(svg) << pipeline::curves_svg(series);
    const bool emitted = fs::file_size(csv) > 0 && fs::file_size(svg) > 0;

    // The shifted curve starts higher at full coverage and bends down toward
    // lower risk as coverage shrinks.
    const auto& id = series[0].points;
    const auto& sh = series[1].points;
    double bend = HUGE_VAL;
    for (const auto& p : sh) {
        if (p.coverage >= 0.2) bend = std::min(bend, p.risk);
    }
    const bool shape = sh.front().risk > id.front().risk && bend < sh.front().risk;
    return {non_monotone == 0 && emitted && shape,
            std::to_string(non_monotone) + " monotonicity violations; risk at full coverage " + fmt(id.front().risk, 3) +
                " held-out vs " + fmt(sh.front().risk, 3) + " shifted, shifted minimum " + fmt(bend, 3) +
                " at coverage >= 0.2; curves in " + svg.string()};
}

// ---------------------------------------------------------------- 12
Verdict audit_integrity(Suite& s) {
    if (s.log_lines.size() != 1000 || !s.anchor) return {false, "no 1000-entry log"};
    const auto& lines = s.log_lines;
    std::string text;
    std::vector<std::size_t> owner;  // line index of each byte, newline included
    for (std::size_t i = 0; i < lines.size(); ++i) {
        text += lines[i] + '\n';
        owner.insert(owner.end(), lines[i].size() + 1, i);
    }
    if (!audit::verify_log_text(text, s.signer, s.anchor).ok) return {false, "untouched log fails to verify"};

    Rng rng(derive_seed(s.seed, 0xCC));
    const int trials = 2000;
    std::vector<std::size_t> pos(trials);
    std::vector<std::uint8_t> mask(trials);
    for (int t = 0; t < trials; ++t) {
        pos[t] = rng.below(text.size());
        mask[t] = static_cast<std::uint8_t>(1 + rng.below(255));
    }
    std::vector<int> missed(trials, 0);
    pipeline::parallel_for(trials, s.threads, [&](std::size_t t) {
        auto m = text;
        if (t % 2 == 0) {
            m[pos[t]] = static_cast<char>(m[pos[t]] ^ mask[t]);
        } else {
            m.erase(pos[t], 1);
        }
        const auto r = audit::verify_log_text(m, s.signer, s.anchor);
        missed[t] = r.ok || r.first_bad != owner[pos[t]];
    });
    int entry_missed = 0;
    for (int t = 0; t < 200; ++t) {
        auto cut = lines;
        const auto idx = rng.below(cut.size());
        cut.erase(cut.begin() + static_cast<std::ptrdiff_t>(idx));
        const auto r = audit::verify_chain(cut, s.signer, s.anchor);
        entry_missed += r.ok || r.first_bad != idx;
    }
    const int byte_missed = std::accumulate(missed.begin(), missed.end(), 0);
    return {byte_missed == 0 && entry_missed == 0,
            std::to_string(trials - byte_missed) + "/" + std::to_string(trials) +
                " byte mutations and deletions located, " + std::to_string(200 - entry_missed) +
                "/200 entry deletions located"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    Suite s;
    s.threads = std::max(1u, std::thread::hardware_concurrency());
    std::string out = "acceptance-out";
    app.add_option("--out", out, "Directory for emitted reports");
    app.add_option("--seed", s.seed, "Master seed");
    app.add_option("--threads", s.threads, "Worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);
    s.out = out;

    const auto t0 = Clock::now();
    s.ref = pipeline::train_reference(s.config);
    s.train_seconds = since(t0);
    s.registry.register_model(s.artifacts().model, s.artifacts().profile, s.artifacts().tree);
    s.device.emplace(s.artifacts(), pipeline::DeviceOptions{});
    std::cout << "reference model trained in " << fmt(s.train_seconds, 3) << " s (T "
              << fmt(s.artifacts().profile.temperature(), 3) << ", tau " << fmt(s.artifacts().profile.tau_reg(), 3)
              << ")\n";

    const std::vector<std::pair<const char*, std::function<Verdict(Suite&)>>> criteria = {
        {"completeness", completeness},
        {"tamper and rollback soundness", tamper_and_rollback},
        {"replay soundness", replay},
        {"spot-check soundness", spot_check},
        {"amortization", amortization},
        {"abstain fast path", abstain_fast_path},
        {"loss gradients", loss_gradients},
        {"calibration oracles", calibration_oracles},
        {"quantization fidelity", quantization_fidelity},
        {"policy equivalence", policy_equivalence},
        {"coverage-risk sanity", coverage_risk},
        {"audit integrity", audit_integrity},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto c0 = Clock::now();
        Verdict v;
        try {
            v = criteria[i].second(s);
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << v.detail
                  << " [" << fmt(since(c0), 3) << " s]" << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
