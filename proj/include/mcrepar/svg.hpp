// Minimal static SVG charts for the benchmark commands. Line series over
// linear or log10 axes, nothing interactive; acceptance reads only CSV, so
// these exist for people. Output is deterministic for fixed input.
#pragma once

#include <string>
#include <vector>

namespace mcrepar {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;  // same length as x; non-finite points are skipped
};

struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    int width = 640;
    int height = 420;
    std::vector<SvgSeries> series;
};

// Render to a complete standalone <svg> document. Throws DomainError when no
// finite data point survives (nothing to scale the axes by).
std::string render_svg(const SvgPlot& plot);

}  // namespace mcrepar
