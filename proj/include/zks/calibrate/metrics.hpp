#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace zks::calibrate {

/// Expected calibration error over equal-width bins on [0, 1]; a
/// confidence of exactly 1 falls in the last bin.
double ece(std::span<const double> confidences, const std::vector<bool>& correct, std::size_t bins = 15);

struct ReliabilityBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double accuracy = 0.0;    // 0 for an empty bin
    double confidence = 0.0;  // mean; 0 for an empty bin
};

std::vector<ReliabilityBin> reliability(std::span<const double> confidences, const std::vector<bool>& correct,
                                        std::size_t bins = 15);

struct CoverageRisk {
    double coverage = 0.0;
    double risk = 0.0;  // 0 when nothing is accepted
};

/// Accepts u >= tau.
CoverageRisk coverage_risk(std::span<const double> confidences, const std::vector<bool>& correct, double tau);

struct MacroF1 {
    double value = 0.0;
    std::size_t absent_classes = 0;  // neither predicted nor labelled; scored 0
};

MacroF1 macro_f1(std::span<const int> predictions, std::span<const int> labels, std::size_t n_classes);
double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct CurvePoint {
    double tau = 0.0;
    double coverage = 0.0;
    double risk = 0.0;
    double f1 = 0.0;  // macro-F1 on the accepted subset
    double utility = 0.0;
};

/// Points in increasing tau; coverage is non-increasing along it.
using CoverageRiskCurve = std::vector<CurvePoint>;

struct ThresholdSelection {
    double tau = 0.0;
    double utility = 0.0;
    CoverageRiskCurve curve;
};

/// Scans tau over {0} and the distinct confidences, maximizing
/// U = F1 - lambda * R; ties go to the smallest tau. U is 0 at zero coverage.
ThresholdSelection select_threshold(std::span<const double> confidences, std::span<const int> predictions,
                                    std::span<const int> labels, std::size_t n_classes, double lambda = 0.5);

/// Probability that a positive outscores a negative, ties counted half.
double auroc(std::span<const double> positive, std::span<const double> negative);

}  // namespace zks::calibrate
