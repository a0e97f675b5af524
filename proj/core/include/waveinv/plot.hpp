#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace waveinv::plot {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool lines = true;
    bool markers = true;
};

struct Figure {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;
};

/// Static SVG line/scatter chart. Non-finite points, and non-positive ones on
/// logarithmic axes, are skipped.
void write_svg(std::ostream& out, const Figure& figure);

void save_svg(const std::string& path, const Figure& figure);

}  // namespace waveinv::plot
