#include "mcrepar/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mcrepar/errors.hpp"

namespace mcrepar {

namespace {

const char* kPalette[] = {"#1f6fb2", "#d1495b", "#3a9d6e", "#8a5fbf",
                          "#c98a2b", "#4d4d4d"};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

struct Axis {
    bool log = false;
    double lo = 0.0;
    double hi = 1.0;

    double map(double v, double pix_lo, double pix_hi) const {
        double t = log ? (std::log10(v) - std::log10(lo)) /
                             (std::log10(hi) - std::log10(lo))
                       : (v - lo) / (hi - lo);
        return pix_lo + t * (pix_hi - pix_lo);
    }

    // Round ticks: powers of ten on log axes, 5 even steps otherwise.
    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            const int e_lo = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
            const int e_hi = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
            for (int e = e_lo; e <= e_hi; ++e) out.push_back(std::pow(10.0, e));
            if (out.size() < 2) {
                out = {lo, hi};
            }
        } else {
            for (int i = 0; i <= 5; ++i) out.push_back(lo + (hi - lo) * i / 5.0);
        }
        return out;
    }
};

bool usable(const SvgPlot& p, bool log_axis, double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return false;
    if (p.log_x && x <= 0.0) return false;
    if (p.log_y && y <= 0.0) return false;
    (void)log_axis;
    return true;
}

void widen(Axis& a) {
    if (a.lo == a.hi) {
        const double pad = a.lo == 0.0 ? 1.0 : std::fabs(a.lo) * 0.5;
        a.lo -= pad;
        a.hi += pad;
    }
    if (!a.log) {
        const double pad = (a.hi - a.lo) * 0.05;
        a.lo -= pad;
        a.hi += pad;
    } else {
        a.lo /= 1.3;
        a.hi *= 1.3;
    }
}

}  // namespace

std::string render_svg(const SvgPlot& plot) {
    Axis ax{plot.log_x, std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};
    Axis ay{plot.log_y, std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};
    bool any = false;
    for (const SvgSeries& s : plot.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
            if (usable(plot, false, s.x[i], s.y[i])) {
                any = true;
                ax.lo = std::min(ax.lo, s.x[i]);
                ax.hi = std::max(ax.hi, s.x[i]);
                ay.lo = std::min(ay.lo, s.y[i]);
                ay.hi = std::max(ay.hi, s.y[i]);
            }
    if (!any) throw DomainError("render_svg: no finite data points");
    widen(ax);
    widen(ay);

    const double W = plot.width, H = plot.height;
    const double L = 72, R = W - 20, T = 40, B = H - 52;

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) +
           "\" height=\"" + fmt(H) + "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) +
           "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fmt(W / 2) + "\" y=\"22\" text-anchor=\"middle\" " +
           "font-family=\"sans-serif\" font-size=\"15\">" + escape(plot.title) +
           "</text>\n";

    // gridlines + tick labels
    for (double t : ax.ticks()) {
        const double px = ax.map(t, L, R);
        out += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(T) + "\" x2=\"" + fmt(px) +
               "\" y2=\"" + fmt(B) + "\" stroke=\"#e0e0e0\"/>\n";
        out += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(B + 16) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">" +
               fmt(t) + "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double py = ay.map(t, B, T);
        out += "<line x1=\"" + fmt(L) + "\" y1=\"" + fmt(py) + "\" x2=\"" + fmt(R) +
               "\" y2=\"" + fmt(py) + "\" stroke=\"#e0e0e0\"/>\n";
        out += "<text x=\"" + fmt(L - 6) + "\" y=\"" + fmt(py + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt(t) + "</text>\n";
    }
    out += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(R - L) +
           "\" height=\"" + fmt(B - T) + "\" fill=\"none\" stroke=\"#404040\"/>\n";
    out += "<text x=\"" + fmt((L + R) / 2) + "\" y=\"" + fmt(H - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           escape(plot.x_label) + "</text>\n";
    out += "<text x=\"16\" y=\"" + fmt((T + B) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 " +
           fmt((T + B) / 2) + ")\">" + escape(plot.y_label) + "</text>\n";

    // series
    for (std::size_t si = 0; si < plot.series.size(); ++si) {
        const SvgSeries& s = plot.series[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(plot, false, s.x[i], s.y[i])) continue;
            const double px = ax.map(s.x[i], L, R);
            const double py = ay.map(s.y[i], B, T);
            if (!pts.empty()) pts += " ";
            pts += fmt(px) + "," + fmt(py);
            out += "<circle cx=\"" + fmt(px) + "\" cy=\"" + fmt(py) +
                   "\" r=\"3\" fill=\"" + color + "\"/>\n";
        }
        if (!pts.empty())
            out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
                   color + "\" stroke-width=\"1.6\"/>\n";
        // legend entry
        const double ly = T + 16 + 16 * static_cast<double>(si);
        out += "<line x1=\"" + fmt(L + 10) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
               fmt(L + 34) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + fmt(L + 40) + "\" y=\"" + fmt(ly) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(s.label) +
               "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace mcrepar
