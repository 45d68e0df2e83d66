#include "awbem/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace awbem {

namespace {

const char* kind_name(WaveletKind k) {
    switch (k) {
        case WaveletKind::Scaling: return "scaling";
        case WaveletKind::Horiz: return "horiz";
        case WaveletKind::Vert: return "vert";
        default: return "diag";
    }
}

WaveletKind kind_from_name(const std::string& name) {
    if (name == "scaling") return WaveletKind::Scaling;
    if (name == "horiz") return WaveletKind::Horiz;
    if (name == "vert") return WaveletKind::Vert;
    if (name == "diag") return WaveletKind::Diag;
    throw std::invalid_argument("unknown wavelet kind: " + name);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_coeffs(std::ostream& out, const CoeffVector& v) {
    out << "awbem-coeffs 1 " << v.size() << "\n";
    for (const auto& [idx, value] : v.entries())
        out << idx.patch << ' ' << idx.level << ' ' << idx.k1 << ' ' << idx.k2 << ' '
            << kind_name(idx.kind) << ' ' << format_double(value) << "\n";
}

CoeffVector read_coeffs(std::istream& in) {
    std::string magic;
    int version = 0;
    std::size_t count = 0;
    in >> magic >> version >> count;
    if (!in || magic != "awbem-coeffs" || version != 1)
        throw std::invalid_argument("read_coeffs: bad header");
    CoeffVector v;
    for (std::size_t i = 0; i < count; ++i) {
        WaveletIndex idx;
        std::string kind;
        double value = 0.0;
        in >> idx.patch >> idx.level >> idx.k1 >> idx.k2 >> kind >> value;
        if (!in) throw std::invalid_argument("read_coeffs: truncated file");
        idx.kind = kind_from_name(kind);
        v.set(idx, value);
    }
    return v;
}

bool save_coeffs(const std::string& path, const CoeffVector& v) {
    std::ofstream out(path);
    if (!out) return false;
    write_coeffs(out, v);
    return static_cast<bool>(out);
}

CoeffVector load_coeffs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_coeffs: cannot open " + path);
    return read_coeffs(in);
}

void write_history_csv(std::ostream& out, const std::vector<ConvergenceRecord>& history) {
    out << "step,dofs,residual,delta,wall_time_s\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        const ConvergenceRecord& r = history[i];
        out << i << ',' << r.dofs << ',' << format_double(r.residual_norm) << ','
            << format_double(r.delta) << ',' << format_double(r.wall_time_s) << "\n";
    }
}

bool save_history_csv(const std::string& path, const std::vector<ConvergenceRecord>& history) {
    std::ofstream out(path);
    if (!out) return false;
    write_history_csv(out, history);
    return static_cast<bool>(out);
}

void write_study_csv(std::ostream& out, const std::vector<ConvergenceRecord>& uniform_history,
                     const std::vector<ConvergenceRecord>& adaptive_history) {
    out << "step,uniform_dofs,uniform_residual,adaptive_dofs,adaptive_residual\n";
    const std::size_t rows = std::max(uniform_history.size(), adaptive_history.size());
    for (std::size_t i = 0; i < rows; ++i) {
        out << i << ',';
        if (i < uniform_history.size())
            out << uniform_history[i].dofs << ','
                << format_double(uniform_history[i].residual_norm);
        else
            out << ',';
        out << ',';
        if (i < adaptive_history.size())
            out << adaptive_history[i].dofs << ','
                << format_double(adaptive_history[i].residual_norm);
        else
            out << ',';
        out << "\n";
    }
}

void dump_surface(std::ostream& out, const Surface& surface) {
    out << "surface " << surface.name() << " patches " << surface.patch_count() << "\n";
    for (const Patch& p : surface.patches()) {
        out << p.id;
        for (const Vec3& c : p.corners)
            out << "  " << c.x() << ' ' << c.y() << ' ' << c.z();
        out << "  n " << p.normal.x() << ' ' << p.normal.y() << ' ' << p.normal.z() << "\n";
    }
}

namespace {

struct LogAxis {
    double lo = 1.0, hi = 10.0;

    double place(double v, double pix_lo, double pix_hi) const {
        const double f = (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
        return pix_lo + f * (pix_hi - pix_lo);
    }
};

}  // namespace

std::string render_loglog_svg(const std::string& title, const std::vector<PlotSeries>& series,
                              const std::vector<GuideLine>& guides) {
    double xmin = 1e300, xmax = 0.0, ymin = 1e300, ymax = 0.0;
    for (const PlotSeries& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!(xmax > 0.0)) {
        xmin = 1.0;
        xmax = 10.0;
        ymin = 0.1;
        ymax = 1.0;
    }
    LogAxis xaxis{std::pow(10.0, std::floor(std::log10(xmin))),
                  std::pow(10.0, std::ceil(std::log10(xmax)))};
    LogAxis yaxis{std::pow(10.0, std::floor(std::log10(ymin))),
                  std::pow(10.0, std::ceil(std::log10(ymax)))};

    const double width = 640, height = 480;
    const double left = 70, right = width - 20, top = 40, bottom = height - 50;
    auto px = [&](double v) { return xaxis.place(v, left, right); };
    auto py = [&](double v) { return yaxis.place(v, bottom, top); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    // frame
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left
        << "\" height=\"" << bottom - top << "\" fill=\"none\" stroke=\"black\"/>\n";

    // decade ticks and grid
    for (double d = std::log10(xaxis.lo); d <= std::log10(xaxis.hi) + 0.5; d += 1.0) {
        const double v = std::pow(10.0, d);
        if (v < xaxis.lo * 0.999 || v > xaxis.hi * 1.001) continue;
        const double x = px(v);
        svg << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << bottom
            << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << x << "\" y=\"" << bottom + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e"
            << static_cast<int>(std::lround(d)) << "</text>\n";
    }
    for (double d = std::log10(yaxis.lo); d <= std::log10(yaxis.hi) + 0.5; d += 1.0) {
        const double v = std::pow(10.0, d);
        if (v < yaxis.lo * 0.999 || v > yaxis.hi * 1.001) continue;
        const double y = py(v);
        svg << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << right << "\" y2=\"" << y
            << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e"
            << static_cast<int>(std::lround(d)) << "</text>\n";
    }
    svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << "degrees of freedom n</text>\n";
    svg << "<text x=\"18\" y=\"" << (top + bottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 18 " << (top + bottom) / 2 << ")\">residual norm</text>\n";

    for (const GuideLine& g : guides) {
        const double n0 = xaxis.lo, n1 = xaxis.hi;
        const double v0 = g.anchor_value * std::pow(n0 / g.anchor_n, -g.rate);
        const double v1 = g.anchor_value * std::pow(n1 / g.anchor_n, -g.rate);
        svg << "<line x1=\"" << px(n0) << "\" y1=\"" << py(v0) << "\" x2=\"" << px(n1)
            << "\" y2=\"" << py(v1)
            << "\" stroke=\"black\" stroke-dasharray=\"6 4\" stroke-width=\"1\"/>\n";
    }

    for (const PlotSeries& s : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\" points=\"";
        for (const auto& [x, y] : s.points) svg << px(x) << ',' << py(y) << ' ';
        svg << "\"/>\n";
        for (const auto& [x, y] : s.points)
            svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.6\" fill=\""
                << s.color << "\"/>\n";
    }

    double ly = top + 18;
    for (const PlotSeries& s : series) {
        svg << "<line x1=\"" << right - 170 << "\" y1=\"" << ly - 4 << "\" x2=\"" << right - 140
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << right - 134 << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
        ly += 16;
    }
    for (const GuideLine& g : guides) {
        svg << "<line x1=\"" << right - 170 << "\" y1=\"" << ly - 4 << "\" x2=\"" << right - 140
            << "\" y2=\"" << ly - 4
            << "\" stroke=\"black\" stroke-dasharray=\"6 4\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << right - 134 << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << g.label << "</text>\n";
        ly += 16;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace awbem
