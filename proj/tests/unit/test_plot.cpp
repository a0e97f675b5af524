#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "waveinv/errors.hpp"
#include "waveinv/plot.hpp"

using namespace waveinv;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

}  // namespace

TEST(Plot, WritesWellFormedSvg) {
    plot::Figure figure;
    figure.title = "errors & rates";
    figure.x_label = "h";
    figure.y_label = "error";
    figure.log_x = figure.log_y = true;
    figure.series.push_back({"empirical", {0.5, 0.25, 0.125}, {1e-2, 2.5e-3, 6e-4}});
    figure.series.push_back({"H^-1", {0.5, 0.25, 0.125, 0.1}, {1e-1, 5e-2, -1.0, NAN}, true, false});
    std::ostringstream out;
    plot::write_svg(out, figure);
    const std::string svg = out.str();
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("errors &amp; rates"), std::string::npos);
    EXPECT_EQ(svg.find("nan"), std::string::npos);
    EXPECT_EQ(count(svg, "<polyline"), 2u);
    EXPECT_EQ(count(svg, "<circle"), 3u);  // markers of the first series only
}

TEST(Plot, EmptyFigureStillRenders) {
    std::ostringstream out;
    plot::write_svg(out, plot::Figure{});
    EXPECT_NE(out.str().find("</svg>"), std::string::npos);
}

TEST(Plot, SaveCreatesFileOrThrows) {
    const auto path = std::filesystem::temp_directory_path() / "waveinv_plot_test.svg";
    plot::Figure figure;
    figure.series.push_back({"line", {0, 1}, {0, 1}});
    plot::save_svg(path.string(), figure);
    std::ifstream in(path);
    EXPECT_TRUE(in.good());
    std::filesystem::remove(path);
    EXPECT_THROW(plot::save_svg("/nonexistent-dir/x/plot.svg", figure), InvalidArgument);
}
