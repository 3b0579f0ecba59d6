#pragma once

#include <span>
#include <string>
#include <vector>

#include "zks/calibrate/metrics.hpp"
#include "zks/pipeline/pipeline.hpp"

namespace zks::pipeline {

/// Table confidences u_q / 128 and top-class correctness of a raw split.
struct SplitScores {
    std::vector<double> confidences;
    std::vector<bool> correct;
    std::vector<int> predictions;
    std::vector<int> labels;
};

SplitScores score_split(const Device& device, std::span<const signal::Window> raw, std::size_t threads = 1);

struct CurveSeries {
    std::string name;
    std::vector<double> tau;
    std::vector<calibrate::CoverageRisk> points;
};

/// Coverage and selective risk at tau = k / 128 for k = 0..128.
CurveSeries grid_curve(std::string name, const SplitScores& scores);

/// series,tau,coverage,risk
std::string curves_csv(std::span<const CurveSeries> series);
/// Risk against coverage, one polyline per series.
std::string curves_svg(std::span<const CurveSeries> series);

/// Mixes each window with a window of another class at weight alpha;
/// t_win is renumbered from first_t_win.
std::vector<signal::Window> blend_classes(std::span<const signal::Window> raw, double alpha,
                                          std::uint64_t first_t_win);

}  // namespace zks::pipeline
