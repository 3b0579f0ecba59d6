#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "zks/calibrate/calibration.hpp"
#include "zks/calibrate/metrics.hpp"
#include "zks/calibrate/profile.hpp"
#include "zks/common/errors.hpp"
#include "zks/common/rng.hpp"

using namespace zks;
using namespace zks::calibrate;

namespace {

// Logits that are true log-probabilities, with labels drawn from them.
struct Calibrated {
    Matrix logits;
    std::vector<int> labels;
};

Calibrated calibrated_sample(std::uint64_t seed, std::size_t n, std::size_t k) {
    Rng rng(seed);
    Calibrated c{Matrix(n, k), {}};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> z(k);
        double norm = 0.0;
        for (auto& v : z) {
            v = rng.normal() * 1.5;
            norm += std::exp(v);
        }
        double u = rng.uniform() * norm, acc = 0.0;
        int y = static_cast<int>(k) - 1;
        for (std::size_t j = 0; j < k; ++j) {
            acc += std::exp(z[j]);
            if (u < acc) {
                y = static_cast<int>(j);
                break;
            }
        }
        for (std::size_t j = 0; j < k; ++j) c.logits(i, j) = z[j] - std::log(norm);
        c.labels.push_back(y);
    }
    return c;
}

// Direct NLL, independent of the loss module.
double nll_oracle(const Matrix& l, const std::vector<int>& y, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.rows; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < l.cols; ++j) z += std::exp(l(i, j) / t);
        s += std::log(z) - l(i, static_cast<std::size_t>(y[i])) / t;
    }
    return s / static_cast<double>(l.rows);
}

double grid_argmin(const Matrix& l, const std::vector<int>& y, std::size_t points = 1000) {
    double best = 0.0, f_best = HUGE_VAL;
    for (std::size_t i = 0; i < points; ++i) {
        const double lt = -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(points - 1);
        const double f = nll_oracle(l, y, std::exp(lt));
        if (f < f_best) {
            f_best = f;
            best = std::exp(lt);
        }
    }
    return best;
}

// Confusion-matrix macro-F1, scored per class from the full K x K table.
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

struct Selection {
    double tau;
    double utility;
};

Selection scan_oracle(const std::vector<double>& u, const std::vector<int>& pred, const std::vector<int>& lab,
                      std::size_t k, double lambda) {
    std::set<double> cands(u.begin(), u.end());
    cands.insert(0.0);
    Selection best{0.0, -HUGE_VAL};
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
        const double util = p.empty() ? 0.0
                                      : f1_oracle(p, l, k) - lambda * static_cast<double>(wrong) / static_cast<double>(p.size());
        if (util > best.utility + 1e-12) best = {tau, util};
    }
    return best;
}

}  // namespace

TEST_CASE("temperature of calibrated logits is near 1, and scales with the logits") {
    auto c = calibrated_sample(1, 40000, 5);
    const double t1 = fit_temperature(c.logits, c.labels);
    MESSAGE("fitted T " << t1 << ", grid " << grid_argmin(c.logits, c.labels, 400));
    CHECK(t1 >= 0.99);
    CHECK(t1 <= 1.01);
    for (auto& v : c.logits.data) v *= 2.0;
    const double t2 = fit_temperature(c.logits, c.labels);
    CHECK(t2 >= 1.98);
    CHECK(t2 <= 2.02);
    CHECK(t2 == doctest::Approx(2.0 * t1).epsilon(1e-5));
}

TEST_CASE("fitted temperature beats a 1000-point grid") {
    Rng rng(2);
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t n = 50 + rng.below(100), k = 2 + rng.below(5);
        Matrix l(n, k);
        std::vector<int> y;
        const double spread = std::exp(rng.uniform(-2.0, 2.5));
        for (auto& v : l.data) v = rng.normal() * spread;
        for (std::size_t i = 0; i < n; ++i) y.push_back(static_cast<int>(rng.below(k)));
        y[0] = 0;
        y[1] = 1;
        const double t = fit_temperature(l, y);
        const double f = nll_oracle(l, y, t);
        CHECK(f <= nll_oracle(l, y, 1.0) + 1e-12);
        for (std::size_t i = 0; i < 1000; ++i) {
            const double lt = -3.0 + 6.0 * static_cast<double>(i) / 999.0;
            CHECK(f <= nll_oracle(l, y, std::exp(lt)) + 1e-9);
        }
    }
}

TEST_CASE("temperature fitting rejects a single class") {
    Matrix l(3, 2);
    const std::vector<int> y = {1, 1, 1};
    CHECK_THROWS_AS(fit_temperature(l, y), ParameterError);
}

TEST_CASE("max softmax and energy") {
    const std::vector<double> l = {1.0, 1.0, 1.0, 1.0};
    CHECK(max_softmax(l, 2.0) == doctest::Approx(0.25));
    CHECK(energy_score(l, 1.0) == doctest::Approx(1.0 + std::log(4.0)));
    const std::vector<double> m = {5.0, 0.0};
    CHECK(max_softmax(m, 1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-5.0))));
    CHECK(max_softmax(m, 5.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK_THROWS_AS(max_softmax(m, 0.0), ParameterError);
    Matrix lm(2, 2);
    lm(0, 0) = 3.0;
    const auto c = confidences(lm, 1.0);
    CHECK(c[0] > c[1]);
    CHECK(c[1] == doctest::Approx(0.5));
    const auto e = confidences(lm, 1.0, ConfidenceKind::energy);
    for (double v : e) CHECK((v > 0.0 && v < 1.0));
}

TEST_CASE("ECE") {
    const std::vector<double> ones(8, 1.0);
    CHECK(ece(ones, std::vector<bool>(8, true)) == 0.0);
    CHECK(ece(ones, std::vector<bool>(8, false)) == 1.0);

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
    CHECK(ece(conf, ok) == doctest::Approx(0.10).epsilon(1e-12));

    CHECK_THROWS_AS(ece(std::vector<double>{}, std::vector<bool>{}), ParameterError);
    CHECK_THROWS_AS(ece(std::vector<double>{1.2}, std::vector<bool>{true}), ParameterError);

    Rng rng(3);
    for (int inst = 0; inst < 200; ++inst) {
        std::vector<double> c;
        std::vector<bool> k;
        for (int i = 0; i < 50; ++i) {
            c.push_back(rng.uniform());
            k.push_back(rng.uniform() < 0.5);
        }
        const double e = ece(c, k);
        CHECK(e >= 0.0);
        CHECK(e <= 1.0);
    }
}

TEST_CASE("reliability bins") {
    const std::vector<double> c = {0.05, 0.15, 0.95, 1.0};
    const std::vector<bool> k = {true, false, true, true};
    const auto r = reliability(c, k, 10);
    REQUIRE(r.size() == 10);
    CHECK(r[0].count == 1);
    CHECK(r[1].count == 1);
    CHECK(r[9].count == 2);
    CHECK(r[9].confidence == doctest::Approx(0.975));
    CHECK(r[1].accuracy == 0.0);
}

TEST_CASE("coverage and risk") {
    const std::vector<double> u = {0.9, 0.8, 0.4};
    const std::vector<bool> ok = {true, false, true};
    auto r = coverage_risk(u, ok, 0.5);
    CHECK(r.coverage == doctest::Approx(2.0 / 3.0));
    CHECK(r.risk == doctest::Approx(0.5));
    r = coverage_risk(u, ok, 0.0);
    CHECK(r.coverage == 1.0);
    CHECK(r.risk == doctest::Approx(1.0 / 3.0));
    r = coverage_risk(u, ok, std::nextafter(0.9, 1.0));
    CHECK(r.coverage == 0.0);
    CHECK(r.risk == 0.0);
}

TEST_CASE("coverage is non-increasing in the threshold") {
    Rng rng(4);
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<double> u;
        std::vector<bool> ok;
        for (int i = 0; i < 60; ++i) {
            u.push_back(std::floor(rng.uniform() * 20.0) / 20.0);
            ok.push_back(rng.uniform() < 0.7);
        }
        double prev = 2.0;
        for (int j = 0; j <= 40; ++j) {
            const double c = coverage_risk(u, ok, j / 40.0).coverage;
            CHECK(c <= prev);
            prev = c;
        }
    }
}

TEST_CASE("macro-F1 and accuracy") {
    const std::vector<int> y = {0, 1, 2, 1, 0};
    CHECK(macro_f1(y, y, 3).value == 1.0);
    CHECK(accuracy(y, y) == 1.0);

    // class 1: TP=1, FP=1, FN=1; class 0 mirrors it
    const std::vector<int> pred = {1, 1, 0, 0}, lab = {1, 0, 1, 0};
    const auto f = macro_f1(pred, lab, 2);
    CHECK(f.value == doctest::Approx(0.5));
    CHECK(f.absent_classes == 0);
    CHECK(accuracy(pred, lab) == 0.5);

    const auto g = macro_f1(std::vector<int>{0, 0}, std::vector<int>{0, 0}, 3);
    CHECK(g.absent_classes == 2);
    CHECK(g.value == doctest::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(macro_f1(std::vector<int>{3}, std::vector<int>{0}, 3), ParameterError);

    Rng rng(5);
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t k = 2 + rng.below(6), n = 1 + rng.below(80);
        std::vector<int> p, l;
        for (std::size_t i = 0; i < n; ++i) {
            l.push_back(static_cast<int>(rng.below(k)));
            p.push_back(rng.uniform() < 0.6 ? l.back() : static_cast<int>(rng.below(k)));
        }
        CHECK(std::abs(macro_f1(p, l, k).value - f1_oracle(p, l, k)) <= 1e-12);
    }
}

TEST_CASE("threshold selection: perfect classifier and F1-only utility") {
    const std::vector<double> u = {0.3, 0.9, 0.6, 0.8};
    const std::vector<int> y = {0, 1, 2, 1};
    const auto sel = select_threshold(u, y, y, 3, 0.5);
    CHECK(sel.tau == 0.0);
    CHECK(sel.utility == 1.0);

    // lambda = 0: dropping the low-confidence mistakes cannot raise F1 past the scan's maximum
    Rng rng(6);
    for (int inst = 0; inst < 50; ++inst) {
        std::vector<double> c;
        std::vector<int> p, l;
        for (int i = 0; i < 40; ++i) {
            c.push_back(rng.uniform());
            l.push_back(static_cast<int>(rng.below(3)));
            p.push_back(rng.uniform() < c.back() ? l.back() : static_cast<int>(rng.below(3)));
        }
        const auto s = select_threshold(c, p, l, 3, 0.0);
        double best = 0.0;
        for (const auto& pt : s.curve) best = std::max(best, pt.f1);
        CHECK(s.utility == doctest::Approx(best));
    }
}

TEST_CASE("threshold selection matches an exhaustive scan") {
    Rng rng(7);
    for (int inst = 0; inst < 60; ++inst) {
        const std::size_t n = inst < 50 ? 200 : 2000 + rng.below(3000);
        const std::size_t k = 2 + rng.below(5);
        const double lambda = inst % 5 == 0 ? 0.0 : rng.uniform(0.0, 2.0);
        std::vector<double> u;
        std::vector<int> p, l;
        for (std::size_t i = 0; i < n; ++i) {
            // coarse confidences force ties
            u.push_back(std::floor(rng.uniform() * 64.0) / 64.0);
            l.push_back(static_cast<int>(rng.below(k)));
            p.push_back(rng.uniform() < u.back() ? l.back() : static_cast<int>(rng.below(k)));
        }
        const auto sel = select_threshold(u, p, l, k, lambda);
        const auto want = scan_oracle(u, p, l, k, lambda);
        CHECK(sel.tau == want.tau);
        CHECK(sel.utility == doctest::Approx(want.utility).epsilon(1e-12));
        for (std::size_t j = 1; j < sel.curve.size(); ++j) {
            CHECK(sel.curve[j].tau > sel.curve[j - 1].tau);
            CHECK(sel.curve[j].coverage <= sel.curve[j - 1].coverage);
        }
    }
}

TEST_CASE("threshold selection edge cases") {
    const auto empty = select_threshold(std::vector<double>{}, std::vector<int>{}, std::vector<int>{}, 2, 0.5);
    CHECK(empty.tau == 0.0);
    CHECK(empty.utility == 0.0);
    CHECK_THROWS_AS(select_threshold(std::vector<double>{0.5}, std::vector<int>{0}, std::vector<int>{0}, 2, -1.0),
                    ParameterError);
    // everything wrong: every candidate accepts something, all tie at U = -lambda, smallest tau wins
    const auto bad = select_threshold(std::vector<double>{0.2, 0.7}, std::vector<int>{0, 0}, std::vector<int>{1, 1}, 2, 0.5);
    CHECK(bad.utility == -0.5);
    CHECK(bad.tau == 0.0);
    CHECK(bad.curve.back().coverage > 0.0);
}

TEST_CASE("AUROC") {
    CHECK(auroc(std::vector<double>{2, 3}, std::vector<double>{0, 1}) == 1.0);
    CHECK(auroc(std::vector<double>{0, 1}, std::vector<double>{2, 3}) == 0.0);
    CHECK(auroc(std::vector<double>{1}, std::vector<double>{1}) == 0.5);
    CHECK_THROWS_AS(auroc(std::vector<double>{}, std::vector<double>{1}), ParameterError);
}

TEST_CASE("calibration profile") {
    const CalibrationProfile p(1.3, 0.4, "abc123", zkp::Fp(99));
    CHECK(p.lambda() == 0.5);
    CHECK(p.ece_bins() == 15);
    CHECK(p.tau_q() == 52);  // ceil(0.4 * 128) = ceil(51.2)
    CHECK(p.with_tau(0.5).tau_q() == 64);
    CHECK(p.with_tau(0.0).tau_q() == 0);

    const auto back = CalibrationProfile::from_json(p.to_json());
    CHECK(back.to_json() == p.to_json());
    CHECK(back.digest() == p.digest());
    CHECK(back.model_hash() == zkp::Fp(99));

    CHECK(p.with_tau(0.41).digest() != p.digest());
    CHECK(p.with_temperature(1.31).digest() != p.digest());
    CHECK(p.tau_reg() == 0.4);  // unchanged by with_*

    CHECK_THROWS_AS(CalibrationProfile(0.0, 0.4, "x", zkp::Fp(1)), ParameterError);
    CHECK_THROWS_AS(CalibrationProfile(1.0, 1.4, "x", zkp::Fp(1)), ParameterError);
    CHECK_THROWS_AS(CalibrationProfile::from_json("{\"temperature\": 1}"), FormatError);
    CHECK_THROWS_AS(CalibrationProfile::from_json("not json"), FormatError);
}
