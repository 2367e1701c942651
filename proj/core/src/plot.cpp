#include "ulpsim/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ulpsim/errors.hpp"

namespace ulpsim {

namespace {

constexpr int kPaneWidth = 860;
constexpr int kPaneHeight = 180;
constexpr int kMarginLeft = 70;
constexpr int kMarginTop = 24;
constexpr int kPaneGap = 34;
constexpr size_t kMaxPoints = 2000;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

std::string render_svg(const Waveform& w, const std::vector<std::string>& nodes) {
    if (nodes.empty()) throw DomainError("plot needs at least one node");
    for (const auto& n : nodes) w.node(n); // throws on unknown node
    if (w.times.size() < 2) throw DomainError("plot needs at least two samples");

    const int total_h = kMarginTop + static_cast<int>(nodes.size()) * (kPaneHeight + kPaneGap);
    const int total_w = kMarginLeft + kPaneWidth + 30;
    const double t_us0 = w.times.front() * 1e6;
    const double t_us1 = w.times.back() * 1e6;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w << "\" height=\""
       << total_h << "\" font-family=\"monospace\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const size_t stride = std::max<size_t>(1, w.times.size() / kMaxPoints);

    for (size_t pane = 0; pane < nodes.size(); ++pane) {
        const auto& v = w.node(nodes[pane]);
        double v_lo = *std::min_element(v.begin(), v.end());
        double v_hi = *std::max_element(v.begin(), v.end());
        if (v_hi - v_lo < 1e-12) {
            v_hi += 0.5;
            v_lo -= 0.5;
        } else {
            const double pad = 0.05 * (v_hi - v_lo);
            v_hi += pad;
            v_lo -= pad;
        }
        const int y0 = kMarginTop + static_cast<int>(pane) * (kPaneHeight + kPaneGap);

        os << "<rect x=\"" << kMarginLeft << "\" y=\"" << y0 << "\" width=\"" << kPaneWidth
           << "\" height=\"" << kPaneHeight << "\" fill=\"none\" stroke=\"black\"/>\n";
        os << "<text x=\"" << kMarginLeft + 6 << "\" y=\"" << y0 + 14 << "\">" << nodes[pane]
           << " (V)</text>\n";

        // y ticks
        for (int k = 0; k <= 4; ++k) {
            const double vy = v_lo + (v_hi - v_lo) * k / 4.0;
            const double py = y0 + kPaneHeight - kPaneHeight * k / 4.0;
            os << "<line x1=\"" << kMarginLeft - 4 << "\" y1=\"" << fmt2(py) << "\" x2=\""
               << kMarginLeft << "\" y2=\"" << fmt2(py) << "\" stroke=\"black\"/>\n";
            os << "<text x=\"4\" y=\"" << fmt2(py + 4) << "\">" << fmt(vy) << "</text>\n";
        }
        // x ticks on the bottom pane edge
        for (int k = 0; k <= 5; ++k) {
            const double tx = t_us0 + (t_us1 - t_us0) * k / 5.0;
            const double px = kMarginLeft + kPaneWidth * k / 5.0;
            os << "<line x1=\"" << fmt2(px) << "\" y1=\"" << y0 + kPaneHeight << "\" x2=\""
               << fmt2(px) << "\" y2=\"" << y0 + kPaneHeight + 4 << "\" stroke=\"black\"/>\n";
            os << "<text x=\"" << fmt2(px - 10) << "\" y=\"" << y0 + kPaneHeight + 16 << "\">"
               << fmt(tx) << "</text>\n";
        }
        os << "<text x=\"" << kMarginLeft + kPaneWidth / 2 - 30 << "\" y=\""
           << y0 + kPaneHeight + 30 << "\">time (us)</text>\n";

        os << "<polyline fill=\"none\" stroke=\"#0050b0\" stroke-width=\"1.2\" points=\"";
        for (size_t i = 0; i < w.times.size(); i += stride) {
            const double px =
                kMarginLeft + (w.times[i] * 1e6 - t_us0) / (t_us1 - t_us0) * kPaneWidth;
            const double py = y0 + kPaneHeight - (v[i] - v_lo) / (v_hi - v_lo) * kPaneHeight;
            os << fmt2(px) << ',' << fmt2(py) << ' ';
        }
        // always include the final sample
        {
            const size_t i = w.times.size() - 1;
            const double px =
                kMarginLeft + (w.times[i] * 1e6 - t_us0) / (t_us1 - t_us0) * kPaneWidth;
            const double py = y0 + kPaneHeight - (v[i] - v_lo) / (v_hi - v_lo) * kPaneHeight;
            os << fmt2(px) << ',' << fmt2(py);
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DomainError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw DomainError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

void emit_plot(const Waveform& w, const std::vector<std::string>& nodes,
               const std::string& path) {
    atomic_write(path, render_svg(w, nodes));
}

} // namespace ulpsim
