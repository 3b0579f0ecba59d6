#include "zks/pipeline/report.hpp"

#include <cstdio>
#include <sstream>

#include "zks/common/errors.hpp"

namespace zks::pipeline {

SplitScores score_split(const Device& device, std::span<const signal::Window> raw, std::size_t threads) {
    SplitScores s;
    s.confidences.resize(raw.size());
    s.correct.resize(raw.size());
    s.predictions.resize(raw.size());
    s.labels.resize(raw.size());
    std::vector<Observation> obs(raw.size());
    parallel_for(raw.size(), threads, [&](std::size_t i) { obs[i] = device.observe(raw[i]); });
    for (std::size_t i = 0; i < raw.size(); ++i) {
        s.confidences[i] = static_cast<double>(obs[i].u_q) / encoder::ConfidenceTable::kScale;
        s.predictions[i] = static_cast<int>(obs[i].top);
        s.labels[i] = obs[i].label;
        s.correct[i] = s.predictions[i] == s.labels[i];
    }
    return s;
}

CurveSeries grid_curve(std::string name, const SplitScores& scores) {
    CurveSeries c{std::move(name), {}, {}};
    for (int k = 0; k <= encoder::ConfidenceTable::kScale; ++k) {
        const double tau = static_cast<double>(k) / encoder::ConfidenceTable::kScale;
        c.tau.push_back(tau);
        c.points.push_back(calibrate::coverage_risk(scores.confidences, scores.correct, tau));
    }
    return c;
}

std::string curves_csv(std::span<const CurveSeries> series) {
    std::ostringstream out;
    out << "series,tau,coverage,risk\n";
    char buf[96];
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.7f,%.6f,%.6f\n", s.tau[i], s.points[i].coverage, s.points[i].risk);
            out << s.name << buf;
        }
    }
    return out.str();
}

std::string curves_svg(std::span<const CurveSeries> series) {
    constexpr double kW = 480, kH = 360, kPad = 48;
    static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    auto x = [&](double cov) { return kPad + cov * (kW - 2 * kPad); };
    auto y = [&](double risk) { return kH - kPad - risk * (kH - 2 * kPad); };
    std::ostringstream out;
    char buf[128];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<path d=\"M%.1f %.1f L%.1f %.1f L%.1f %.1f\" stroke=\"black\" fill=\"none\"/>\n",
                  x(0), y(1), x(0), y(0), x(1), y(0));
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">coverage</text>\n", kW / 2,
                  kH - 12);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"14\" y=\"%.1f\" transform=\"rotate(-90 14 %.1f)\" text-anchor=\"middle\">risk</text>\n",
                  kH / 2, kH / 2);
    out << buf;
    for (int t = 0; t <= 4; ++t) {
        const double v = t / 4.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" text-anchor=\"middle\">%.2f</text>\n",
                      x(v), y(0) + 14, v);
        out << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" text-anchor=\"end\">%.2f</text>\n",
                      x(0) - 4, y(v) + 3, v);
        out << buf;
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kColors[i % 4];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& p : series[i].points) {
            if (p.coverage == 0.0) continue;  // risk is undefined without accepted windows
            std::snprintf(buf, sizeof buf, "%.1f,%.1f ", x(p.coverage), y(p.risk));
            out << buf;
        }
        out << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">", x(0) + 10,
                      y(1) + 16 * static_cast<double>(i + 1), color);
        out << buf << series[i].name << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::vector<signal::Window> blend_classes(std::span<const signal::Window> raw, double alpha,
                                          std::uint64_t first_t_win) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("blend weight must lie in [0, 1]");
    std::vector<signal::Window> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        // Nearest later window with another label, wrapping around.
        std::size_t j = (i + 1) % raw.size();
        while (j != i && raw[j].label() == raw[i].label()) j = (j + 1) % raw.size();
        const auto a = raw[i].data();
        const auto b = raw[j].data();
        std::vector<double> mixed(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) mixed[k] = (1.0 - alpha) * a[k] + alpha * b[k];
        out.push_back(raw[i].with_data(std::move(mixed)).with_t_win(first_t_win + i));
    }
    return out;
}

}  // namespace zks::pipeline
