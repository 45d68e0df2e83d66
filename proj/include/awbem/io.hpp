#pragma once

#include "awbem/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace awbem {

/// One-line header followed by "patch level k1 k2 kind value" lines.
void write_coeffs(std::ostream& out, const CoeffVector& v);
CoeffVector read_coeffs(std::istream& in);
bool save_coeffs(const std::string& path, const CoeffVector& v);
CoeffVector load_coeffs(const std::string& path);  // throws on malformed input

/// History CSV with the exact header "step,dofs,residual,delta,wall_time_s".
void write_history_csv(std::ostream& out, const std::vector<ConvergenceRecord>& history);
bool save_history_csv(const std::string& path, const std::vector<ConvergenceRecord>& history);

/// Combined CSV of two histories (uniform/adaptive study).
void write_study_csv(std::ostream& out, const std::vector<ConvergenceRecord>& uniform_history,
                     const std::vector<ConvergenceRecord>& adaptive_history);

/// Plain-text patch listing (id, corners, normal) for debugging.
void dump_surface(std::ostream& out, const Surface& surface);

struct PlotSeries {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;  // (n, value), positive
};

struct GuideLine {
    double rate = 0.0;    // drawn as value = anchor_value * (n/anchor_n)^-rate
    double anchor_n = 1.0;
    double anchor_value = 1.0;
    std::string label;
};

/// Self-contained log-log SVG plot: axes with decade ticks, one polyline per
/// series, dashed guide lines, text legend. No external assets.
std::string render_loglog_svg(const std::string& title, const std::vector<PlotSeries>& series,
                              const std::vector<GuideLine>& guides);

}  // namespace awbem
