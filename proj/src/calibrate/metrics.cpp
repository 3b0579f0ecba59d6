#include "zks/calibrate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zks/common/errors.hpp"

namespace zks::calibrate {
namespace {

void check_pair(std::size_t a, std::size_t b) {
    if (a != b) throw ParameterError("input lengths differ");
}

void check_labels(std::span<const int> v, std::size_t n_classes) {
    for (int x : v) {
        if (x < 0 || static_cast<std::size_t>(x) >= n_classes) throw ParameterError("class index out of range");
    }
}

struct Confusion {
    std::vector<std::size_t> tp, fp, fn;

    explicit Confusion(std::size_t k) : tp(k, 0), fp(k, 0), fn(k, 0) {}

    void add(int pred, int label, int sign) {
        const auto p = static_cast<std::size_t>(pred), l = static_cast<std::size_t>(label);
        auto bump = [sign](std::size_t& v) { v = static_cast<std::size_t>(static_cast<long long>(v) + sign); };
        if (p == l) {
            bump(tp[p]);
        } else {
            bump(fp[p]);
            bump(fn[l]);
        }
    }

    MacroF1 score() const {
        MacroF1 r;
        for (std::size_t k = 0; k < tp.size(); ++k) {
            const std::size_t den = 2 * tp[k] + fp[k] + fn[k];
            if (den == 0) {
                ++r.absent_classes;
                continue;
            }
            r.value += 2.0 * static_cast<double>(tp[k]) / static_cast<double>(den);
        }
        r.value /= static_cast<double>(tp.size());
        return r;
    }
};

}  // namespace

std::vector<ReliabilityBin> reliability(std::span<const double> confidences, const std::vector<bool>& correct,
                                        std::size_t bins) {
    check_pair(confidences.size(), correct.size());
    if (confidences.empty()) throw ParameterError("no samples");
    if (bins == 0) throw ParameterError("need at least one bin");
    std::vector<ReliabilityBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lo = static_cast<double>(b) / static_cast<double>(bins);
        out[b].hi = static_cast<double>(b + 1) / static_cast<double>(bins);
    }
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const double c = confidences[i];
        if (!(c >= 0.0 && c <= 1.0)) throw ParameterError("confidence outside [0, 1]");
        const auto b = std::min(static_cast<std::size_t>(c * static_cast<double>(bins)), bins - 1);
        ++out[b].count;
        out[b].accuracy += correct[i] ? 1.0 : 0.0;
        out[b].confidence += c;
    }
    for (auto& b : out) {
        if (b.count == 0) continue;
        b.accuracy /= static_cast<double>(b.count);
        b.confidence /= static_cast<double>(b.count);
    }
    return out;
}

double ece(std::span<const double> confidences, const std::vector<bool>& correct, std::size_t bins) {
    const auto rel = reliability(confidences, correct, bins);
    double e = 0.0;
    for (const auto& b : rel) {
        e += static_cast<double>(b.count) * std::abs(b.accuracy - b.confidence);
    }
    return e / static_cast<double>(confidences.size());
}

CoverageRisk coverage_risk(std::span<const double> confidences, const std::vector<bool>& correct, double tau) {
    check_pair(confidences.size(), correct.size());
    std::size_t accepted = 0, wrong = 0;
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        if (confidences[i] >= tau) {
            ++accepted;
            wrong += correct[i] ? 0 : 1;
        }
    }
    CoverageRisk r;
    if (confidences.empty() || accepted == 0) return r;
    r.coverage = static_cast<double>(accepted) / static_cast<double>(confidences.size());
    r.risk = static_cast<double>(wrong) / static_cast<double>(accepted);
    return r;
}

MacroF1 macro_f1(std::span<const int> predictions, std::span<const int> labels, std::size_t n_classes) {
    check_pair(predictions.size(), labels.size());
    if (n_classes == 0) throw ParameterError("need at least one class");
    check_labels(predictions, n_classes);
    check_labels(labels, n_classes);
    Confusion c(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) c.add(predictions[i], labels[i], +1);
    return c.score();
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
    check_pair(predictions.size(), labels.size());
    if (labels.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

ThresholdSelection select_threshold(std::span<const double> confidences, std::span<const int> predictions,
                                    std::span<const int> labels, std::size_t n_classes, double lambda) {
    check_pair(confidences.size(), predictions.size());
    check_pair(confidences.size(), labels.size());
    if (!(lambda >= 0.0)) throw ParameterError("utility weight must be non-negative");
    if (n_classes == 0) throw ParameterError("need at least one class");
    check_labels(predictions, n_classes);
    check_labels(labels, n_classes);

    const std::size_t n = confidences.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return confidences[a] < confidences[b]; });

    std::vector<double> taus = {0.0};
    for (std::size_t i : order) {
        if (confidences[i] > taus.back()) taus.push_back(confidences[i]);
    }

    Confusion conf(n_classes);
    std::size_t accepted = n, wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
        conf.add(predictions[i], labels[i], +1);
        wrong += predictions[i] != labels[i];
    }

    ThresholdSelection sel;
    sel.utility = -HUGE_VAL;
    std::size_t next = 0;  // first sample in order not yet dropped
    for (double tau : taus) {
        while (next < n && confidences[order[next]] < tau) {
            const std::size_t i = order[next++];
            conf.add(predictions[i], labels[i], -1);
            wrong -= predictions[i] != labels[i];
            --accepted;
        }
        CurvePoint p;
        p.tau = tau;
        if (accepted > 0) {
            p.coverage = static_cast<double>(accepted) / static_cast<double>(n);
            p.risk = static_cast<double>(wrong) / static_cast<double>(accepted);
            p.f1 = conf.score().value;
            p.utility = p.f1 - lambda * p.risk;
        }
        sel.curve.push_back(p);
        if (p.utility > sel.utility) {
            sel.utility = p.utility;
            sel.tau = tau;
        }
    }
    return sel;
}

double auroc(std::span<const double> positive, std::span<const double> negative) {
    if (positive.empty() || negative.empty()) throw ParameterError("AUROC needs both classes");
    std::vector<double> neg(negative.begin(), negative.end());
    std::sort(neg.begin(), neg.end());
    double wins = 0.0;
    for (double p : positive) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
        const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
        wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return wins / (static_cast<double>(positive.size()) * static_cast<double>(neg.size()));
}

}  // namespace zks::calibrate
