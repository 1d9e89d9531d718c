#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ctxrace::tools {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

double nice_step(double span) {
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) return m * mag;
    }
    return 10.0 * mag;
}

}  // namespace

std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series, bool equal_aspect) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const Series& s : series) {
        for (Vec2 p : s.points) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-9) x1 = x0 + 1.0;
    if (y1 - y0 < 1e-9) y1 = y0 + 1.0;
    const double pad_x = 0.04 * (x1 - x0), pad_y = 0.06 * (y1 - y0);
    x0 -= pad_x, x1 += pad_x, y0 -= pad_y, y1 += pad_y;

    const double left = 70, right = 170, top = 40, bottom = 55;
    double plot_w = 640, plot_h = 420;
    if (equal_aspect) plot_h = std::clamp(plot_w * (y1 - y0) / (x1 - x0), 200.0, 900.0);
    if (equal_aspect && plot_h == 900.0) plot_w = plot_h * (x1 - x0) / (y1 - y0);
    const double width = left + plot_w + right, height = top + plot_h + bottom;
    const auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * plot_w; };
    const auto sy = [&](double y) { return top + (y1 - y) / (y1 - y0) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << escape(title) << "</text>\n";
    out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w) << "\" height=\""
        << num(plot_h) << "\" fill=\"none\" stroke=\"#444\"/>\n";

    const double xs = nice_step(x1 - x0), ys = nice_step(y1 - y0);
    for (double t = std::ceil(x0 / xs) * xs; t <= x1; t += xs) {
        out << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(sx(t)) << "\" y2=\""
            << num(top + plot_h) << "\" stroke=\"#eee\"/>\n";
        out << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(top + plot_h + 16) << "\" text-anchor=\"middle\">"
            << num(std::abs(t) < 1e-12 ? 0.0 : t) << "</text>\n";
    }
    for (double t = std::ceil(y0 / ys) * ys; t <= y1; t += ys) {
        out << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(left + plot_w) << "\" y2=\""
            << num(sy(t)) << "\" stroke=\"#eee\"/>\n";
        out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(t) + 4) << "\" text-anchor=\"end\">"
            << num(std::abs(t) < 1e-12 ? 0.0 : t) << "</text>\n";
    }
    out << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(height - 12) << "\" text-anchor=\"middle\">"
        << escape(x_label) << "</text>\n";
    out << "<text transform=\"translate(18," << num(top + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(y_label) << "</text>\n";

    for (const Series& s : series) {
        if (s.points.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << num(s.stroke) << "\"";
        if (s.dashed) out << " stroke-dasharray=\"5,4\"";
        out << " points=\"";
        for (Vec2 p : s.points) out << num(sx(p.x)) << ',' << num(sy(p.y)) << ' ';
        out << "\"/>\n";
    }
    double ly = top + 10;
    for (const Series& s : series) {
        if (s.label.empty()) continue;
        const double lx = left + plot_w + 14;
        out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 22) << "\" y2=\"" << num(ly)
            << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"5,4\"" : "")
            << "/>\n";
        out << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label) << "</text>\n";
        ly += 18;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace ctxrace::tools
