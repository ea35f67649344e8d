#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sdwave/experiments.hpp"

namespace sdwave {

std::string results_csv(std::span<const ErrorRecord> records) {
    std::string out = "scheme,axis,level,err_u,stderr_u,err_v,stderr_v\n";
    for (const auto& r : records) {
        out += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", to_string(r.scheme), to_string(r.axis),
                           r.level, r.err_u, r.stderr_u, r.err_v, r.stderr_v);
    }
    return out;
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 200.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

struct Series {
    Scheme scheme;
    Field field;
    std::vector<std::pair<double, double>> points;  // (log10 level, log10 error)
};

struct Frame {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

    double px(double lx) const { return kLeft + (lx - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double ly) const { return kHeight - kBottom - (ly - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

const char* colour(Scheme s, Field f) {
    if (s == Scheme::aee) {
        return f == Field::displacement ? "#1f77b4" : "#d62728";
    }
    return f == Field::displacement ? "#2ca02c" : "#9467bd";
}

const char* series_label(Scheme s, Field f) {
    if (s == Scheme::aee) {
        return f == Field::displacement ? "AEE-D" : "AEE-V";
    }
    return f == Field::displacement ? "LIE-D" : "LIE-V";
}

}  // namespace

std::string results_svg(std::span<const ErrorRecord> records, std::span<const SeriesFit> fits,
                        std::span<const double> guide_orders) {
    std::vector<Series> series;
    for (const auto& r : records) {
        for (Field field : {Field::displacement, Field::velocity}) {
            auto it = std::find_if(series.begin(), series.end(),
                                   [&](const Series& s) { return s.scheme == r.scheme && s.field == field; });
            if (it == series.end()) {
                series.push_back({r.scheme, field, {}});
                it = std::prev(series.end());
            }
            const double e = field == Field::displacement ? r.err_u : r.err_v;
            if (e > 0.0 && r.level > 0.0) {
                it->points.emplace_back(std::log10(r.level), std::log10(e));
            }
        }
    }

    Frame frame;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (std::isfinite(xmin)) {
        frame = {std::floor(xmin * 10.0 - 1.0) / 10.0, std::ceil(xmax * 10.0 + 1.0) / 10.0,
                 std::floor(ymin - 0.1), std::ceil(ymax + 0.1)};
    }

    std::string out;
    out += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
        kWidth, kHeight, kWidth, kHeight);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                       kLeft, kTop, kWidth - kLeft - kRight, kHeight - kTop - kBottom);
    for (int d = static_cast<int>(std::ceil(frame.y0)); d <= static_cast<int>(std::floor(frame.y1)); ++d) {
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"end\">1e{}</text>\n",
                           kLeft - 6.0, frame.py(d) + 4.0, d);
    }
    for (int d = static_cast<int>(std::ceil(frame.x0)); d <= static_cast<int>(std::floor(frame.x1)); ++d) {
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"middle\">1e{}</text>\n",
                           frame.px(d), kHeight - kBottom + 16.0, d);
    }
    const bool spatial = !records.empty() && records.front().axis == Axis::spatial;
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                       kLeft + 0.5 * (kWidth - kLeft - kRight), kHeight - 20.0, spatial ? "N" : "k");

    if (!series.empty() && !series.front().points.empty()) {
        const auto [ax, ay] = series.front().points.front();
        for (double order : guide_orders) {
            const double bx = ax < frame.x1 - 1e-12 ? frame.x1 : frame.x0;
            const double by = ay + order * (bx - ax);
            out += fmt::format(
                "<line class=\"guide\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"gray\" "
                "stroke-dasharray=\"6,4\"/>\n",
                frame.px(ax), frame.py(ay), frame.px(bx), frame.py(by));
        }
    }

    double legend_y = kTop + 14.0;
    for (const auto& s : series) {
        std::string pts;
        for (auto [x, y] : s.points) {
            if (!pts.empty()) {
                pts += ' ';
            }
            pts += fmt::format("{:.2f},{:.2f}", frame.px(x), frame.py(y));
        }
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                           colour(s.scheme, s.field), pts);
        std::string label = series_label(s.scheme, s.field);
        for (const auto& f : fits) {
            if (f.scheme == s.scheme && f.field == s.field) {
                label += fmt::format(" slope {:.3f}", f.fit.slope);
            }
        }
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\" fill=\"{}\">{}</text>\n",
                           kWidth - kRight + 12.0, legend_y, colour(s.scheme, s.field), label);
        legend_y += 18.0;
    }
    for (double order : guide_orders) {
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" fill=\"gray\">guide order {:.4g}</text>\n",
                           kWidth - kRight + 12.0, legend_y, order);
        legend_y += 16.0;
    }
    out += "</svg>\n";
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    f << contents;
    if (!f.flush()) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

}  // namespace

void emit_results(std::span<const ErrorRecord> records, std::span<const SeriesFit> fits,
                  const std::filesystem::path& dir, std::span<const double> guide_orders) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
    }
    write_file(dir / "results.csv", results_csv(records));
    write_file(dir / "convergence.svg", results_svg(records, fits, guide_orders));
}

}  // namespace sdwave
