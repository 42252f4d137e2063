#include "epicast/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "epicast/csv.hpp"
#include "epicast/dates.hpp"

namespace epicast {

namespace {

constexpr double kWidth = 1200.0;
constexpr double kHeight = 600.0;
constexpr double kLeft = 90.0;
constexpr double kRight = 30.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 70.0;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// round a raw tick spacing to 1/2/5 * 10^k
double nice_step(double raw) {
    if (raw <= 0.0) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    if (frac <= 1.0) return mag;
    if (frac <= 2.0) return 2.0 * mag;
    if (frac <= 5.0) return 5.0 * mag;
    return 10.0 * mag;
}

std::string format_count(double v) {
    char buf[40];
    if (std::abs(v) >= 1000.0) std::snprintf(buf, sizeof(buf), "%.0f", v);
    else std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

std::string render_line_chart(const ChartSpec& spec) {
    int max_day = 1;
    double y_min = 0.0, y_max = 1.0;
    bool any = false;
    auto consider = [&](double v) {
        if (!any) {
            y_min = y_max = v;
            any = true;
        } else {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    };
    for (const ChartSeries& s : spec.series) {
        max_day = std::max(max_day, s.day_offset + static_cast<int>(s.values.size()) - 1);
        for (double v : s.values) consider(v);
    }
    for (const ChartBand& b : spec.bands) {
        max_day = std::max(max_day, b.day_offset + static_cast<int>(b.lower.size()) - 1);
        for (double v : b.lower) consider(v);
        for (double v : b.upper) consider(v);
    }
    if (y_max <= y_min) y_max = y_min + 1.0;
    y_min = std::min(0.0, y_min);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto x_of = [&](double day) { return kLeft + plot_w * day / std::max(1, max_day); };
    auto y_of = [&](double v) { return kTop + plot_h * (1.0 - (v - y_min) / (y_max - y_min)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1200\" height=\"600\" "
           "viewBox=\"0 0 1200 600\">\n";
    svg << "<rect width=\"1200\" height=\"600\" fill=\"white\"/>\n";
    svg << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"28\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"18\">"
        << xml_escape(spec.title) << "</text>\n";

    // y grid + labels
    const double y_step = nice_step((y_max - y_min) / 6.0);
    for (double v = std::ceil(y_min / y_step) * y_step; v <= y_max + 1e-9; v += y_step) {
        const double y = y_of(v);
        svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y) << "\" x2=\""
            << fmt(kWidth - kRight) << "\" y2=\"" << fmt(y)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << format_count(v) << "</text>\n";
    }

    // x ticks: ISO dates, week-aligned once the axis is long enough
    int x_step = std::max(1, max_day / 8);
    if (x_step > 7) x_step = ((x_step + 6) / 7) * 7;
    for (int day = 0; day <= max_day; day += x_step) {
        const double x = x_of(day);
        svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kHeight - kBottom) << "\" x2=\""
            << fmt(x) << "\" y2=\"" << fmt(kHeight - kBottom + 6)
            << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kHeight - kBottom + 22)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_iso(spec.start_date + day) << "</text>\n";
    }

    // axes
    svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(kLeft)
        << "\" y2=\"" << fmt(kHeight - kBottom) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kHeight - kBottom) << "\" x2=\""
        << fmt(kWidth - kRight) << "\" y2=\"" << fmt(kHeight - kBottom)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"" << fmt(kHeight - 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">date</text>\n";
    svg << "<text x=\"20\" y=\"" << fmt(kHeight / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 20 "
        << fmt(kHeight / 2) << ")\">" << xml_escape(spec.y_label) << "</text>\n";

    for (const ChartBand& b : spec.bands) {
        if (b.lower.empty() || b.lower.size() != b.upper.size()) continue;
        svg << "<polygon fill=\"" << b.color << "\" fill-opacity=\"0.25\" stroke=\"none\" "
               "points=\"";
        for (std::size_t i = 0; i < b.upper.size(); ++i)
            svg << fmt(x_of(b.day_offset + static_cast<int>(i))) << "," << fmt(y_of(b.upper[i]))
                << " ";
        for (std::size_t i = b.lower.size(); i-- > 0;)
            svg << fmt(x_of(b.day_offset + static_cast<int>(i))) << "," << fmt(y_of(b.lower[i]))
                << " ";
        svg << "\"/>\n";
    }

    for (const ChartSeries& s : spec.series) {
        if (s.values.empty()) continue;
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\""
            << fmt(s.width) << "\"";
        if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
        svg << " points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i)
            svg << fmt(x_of(s.day_offset + static_cast<int>(i))) << "," << fmt(y_of(s.values[i]))
                << " ";
        svg << "\"/>\n";
    }

    // legend
    double ly = kTop + 8;
    for (const ChartBand& b : spec.bands) {
        svg << "<rect x=\"" << fmt(kLeft + 12) << "\" y=\"" << fmt(ly) << "\" width=\"22\" "
               "height=\"10\" fill=\""
            << b.color << "\" fill-opacity=\"0.25\"/>\n";
        svg << "<text x=\"" << fmt(kLeft + 40) << "\" y=\"" << fmt(ly + 9)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(b.name)
            << "</text>\n";
        ly += 18;
    }
    for (const ChartSeries& s : spec.series) {
        svg << "<line x1=\"" << fmt(kLeft + 12) << "\" y1=\"" << fmt(ly + 5) << "\" x2=\""
            << fmt(kLeft + 34) << "\" y2=\"" << fmt(ly + 5) << "\" stroke=\"" << s.color
            << "\" stroke-width=\"3\"";
        if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
        svg << "/>\n";
        svg << "<text x=\"" << fmt(kLeft + 40) << "\" y=\"" << fmt(ly + 9)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.name)
            << "</text>\n";
        ly += 18;
    }

    svg << "</svg>\n";
    return svg.str();
}

void write_line_chart(const ChartSpec& spec, const std::string& path) {
    atomic_write_file(path, render_line_chart(spec));
}

}  // namespace epicast
