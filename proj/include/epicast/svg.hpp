#pragma once

#include <string>
#include <vector>

#include "epicast/linalg.hpp"

namespace epicast {

struct ChartSeries {
    std::string name;
    std::string color;
    Vector values;        // y per day
    int day_offset = 0;   // x position of values[0], in days from chart start
    double width = 2.0;
    bool dashed = false;
};

struct ChartBand {
    std::string name;
    std::string color;  // fill, rendered at low opacity
    Vector lower, upper;
    int day_offset = 0;
};

struct ChartSpec {
    std::string title;
    std::string y_label = "cases";
    int start_date = 0;  // serial day of x = 0; x tick labels are ISO dates
    std::vector<ChartSeries> series;
    std::vector<ChartBand> bands;
};

/// Fixed 1200x600 line chart with date axis, y ticks, legend and optional
/// envelope bands. Output is deterministic for identical input.
std::string render_line_chart(const ChartSpec& spec);

void write_line_chart(const ChartSpec& spec, const std::string& path);

}  // namespace epicast
