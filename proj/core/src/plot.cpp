#include "waveinv/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "waveinv/errors.hpp"

namespace waveinv::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string format(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

struct Axis {
    bool log = false;
    double lo = 0.0;
    double hi = 1.0;

    double map(double v) const { return log ? std::log10(v) : v; }
    double fraction(double v) const { return (map(v) - lo) / (hi - lo); }
    bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }

    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            for (double e = std::ceil(lo); e <= std::floor(hi) + 1e-9; e += 1.0) {
                out.push_back(std::pow(10.0, e));
            }
            if (out.size() >= 2) {
                return out;
            }
            out.clear();
        }
        for (int i = 0; i <= 4; ++i) {
            const double m = lo + (hi - lo) * i / 4.0;
            out.push_back(log ? std::pow(10.0, m) : m);
        }
        return out;
    }
};

Axis fit_axis(const Figure& figure, bool horizontal) {
    Axis axis;
    axis.log = horizontal ? figure.log_x : figure.log_y;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Series& s : figure.series) {
        const std::size_t count = std::min(s.x.size(), s.y.size());
        for (std::size_t i = 0; i < count; ++i) {
            const double v = horizontal ? s.x[i] : s.y[i];
            if (!axis.usable(v)) {
                continue;
            }
            lo = std::min(lo, axis.map(v));
            hi = std::max(hi, axis.map(v));
        }
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    } else {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    axis.lo = lo;
    axis.hi = hi;
    return axis;
}

}  // namespace

void write_svg(std::ostream& out, const Figure& figure) {
    const Axis ax = fit_axis(figure, true);
    const Axis ay = fit_axis(figure, false);
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + pw * ax.fraction(v); };
    auto py = [&](double v) { return kTop + ph * (1.0 - ay.fraction(v)); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(figure.title) << "</text>\n";
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : ax.ticks()) {
        const double x = px(t);
        out << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 5
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << format(t)
            << "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double y = py(t);
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << format(t)
            << "</text>\n";
    }
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
        << escape(figure.x_label) << "</text>\n";
    out << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(figure.y_label) << "</text>\n";

    for (std::size_t k = 0; k < figure.series.size(); ++k) {
        const Series& s = figure.series[k];
        const char* color = kColors[k % std::size(kColors)];
        std::ostringstream path;
        const std::size_t count = std::min(s.x.size(), s.y.size());
        for (std::size_t i = 0; i < count; ++i) {
            if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) {
                continue;
            }
            path << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            if (s.markers) {
                out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color
                    << "\"/>\n";
            }
        }
        if (s.lines && !path.str().empty()) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << path.str()
                << "\"/>\n";
        }
        const double ly = kTop + 16.0 * (k + 1);
        out << "<line x1=\"" << kWidth - kRight + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kWidth - kRight + 32
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
}

void save_svg(const std::string& path, const Figure& figure) {
    std::ofstream file(path);
    if (!file) {
        throw InvalidArgument("cannot write plot file " + path);
    }
    write_svg(file, figure);
}

}  // namespace waveinv::plot
