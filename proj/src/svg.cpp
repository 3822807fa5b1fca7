#include "sintro/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace sintro::svg {

namespace {

std::string rgb(const Rgb& c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)",
                  int(std::lround(std::clamp(c[0], 0.0, 1.0) * 255.0)),
                  int(std::lround(std::clamp(c[1], 0.0, 1.0) * 255.0)),
                  int(std::lround(std::clamp(c[2], 0.0, 1.0) * 255.0)));
    return buf;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

const std::vector<Rgb>& default_palette() {
    static const std::vector<Rgb> palette = {
        {0.122, 0.467, 0.706}, {1.000, 0.498, 0.055}, {0.173, 0.627, 0.173},
        {0.839, 0.153, 0.157}, {0.580, 0.404, 0.741}, {0.549, 0.337, 0.294},
        {0.890, 0.467, 0.761}, {0.498, 0.498, 0.498}, {0.737, 0.741, 0.133},
        {0.090, 0.745, 0.812}};
    return palette;
}

void export_scatter(const std::string& path, const std::vector<ScatterPoint>& points,
                    const ScatterStyle& style, const Heatmap* heatmap,
                    const std::vector<std::vector<LatentPoint>>* polylines) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write svg: " + path);

    const auto& palette = style.palette.empty() ? default_palette() : style.palette;
    const double margin = 40.0;
    const double plot = double(style.size_px);
    const double total = plot + 2.0 * margin;
    const double b = style.bound;
    auto px = [&](double z) { return margin + (z + b) / (2.0 * b) * plot; };
    auto py = [&](double z) { return margin + (b - z) / (2.0 * b) * plot; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total
        << "\" height=\"" << total << "\" viewBox=\"0 0 " << total << " " << total
        << "\">\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot
        << "\" height=\"" << plot << "\" fill=\"white\" stroke=\"black\"/>\n";

    if (heatmap) {
        const std::size_t nodes = heatmap->cfg.nodes_per_axis();
        double lo = *std::min_element(heatmap->values.begin(), heatmap->values.end());
        double hi = *std::max_element(heatmap->values.begin(), heatmap->values.end());
        if (hi <= lo) hi = lo + 1.0;
        const double cell = plot / double(nodes);
        out << "<g shape-rendering=\"crispEdges\">\n";
        for (std::size_t iy = 0; iy < nodes; ++iy)
            for (std::size_t ix = 0; ix < nodes; ++ix) {
                const double v =
                    (heatmap->values[iy * nodes + ix] - lo) / (hi - lo);
                // light-to-dark red ramp
                const Rgb c = {1.0, 1.0 - 0.8 * v, 1.0 - 0.8 * v};
                const double cx = px(heatmap->cfg.node(ix)) - cell / 2.0;
                const double cy = py(heatmap->cfg.node(iy)) - cell / 2.0;
                out << "<rect x=\"" << num(cx) << "\" y=\"" << num(cy) << "\" width=\""
                    << num(cell) << "\" height=\"" << num(cell) << "\" fill=\""
                    << rgb(c) << "\"/>\n";
            }
        out << "</g>\n";
    }

    if (polylines) {
        for (const auto& line : *polylines) {
            if (line.empty()) continue;
            out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
            for (const auto& z : line)
                out << num(px(z.z1)) << "," << num(py(z.z2)) << " ";
            out << "\"/>\n";
        }
    }

    for (const auto& p : points) {
        const Rgb& c = palette[std::size_t(p.cls) % palette.size()];
        out << "<circle cx=\"" << num(px(p.z.z1)) << "\" cy=\"" << num(py(p.z.z2))
            << "\" r=\"" << style.point_radius << "\" fill=\"" << rgb(c)
            << "\" fill-opacity=\"0.7\"/>\n";
    }

    // axes labels and extent ticks
    out << "<text x=\"" << total / 2.0 << "\" y=\"" << total - 8.0
        << "\" text-anchor=\"middle\" font-size=\"14\">z1</text>\n";
    out << "<text x=\"12\" y=\"" << total / 2.0
        << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 12 "
        << total / 2.0 << ")\">z2</text>\n";
    for (double t : {-b, 0.0, b}) {
        out << "<text x=\"" << num(px(t)) << "\" y=\"" << total - margin + 16.0
            << "\" text-anchor=\"middle\" font-size=\"10\">" << t << "</text>\n";
        out << "<text x=\"" << margin - 6.0 << "\" y=\"" << num(py(t) + 3.0)
            << "\" text-anchor=\"end\" font-size=\"10\">" << t << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw Error("svg write failed: " + path);
}

void export_brainbow(const std::string& path, const std::vector<Rgb>& unit_colors,
                     const std::vector<std::size_t>& layer_widths, int cell_px) {
    std::size_t total_units = 0;
    std::size_t max_width = 0;
    for (std::size_t w : layer_widths) {
        total_units += w;
        max_width = std::max(max_width, w);
    }
    if (unit_colors.size() != total_units)
        throw Error("export_brainbow: color count " + std::to_string(unit_colors.size()) +
                    " != unit count " + std::to_string(total_units));

    std::ofstream out(path);
    if (!out) throw Error("cannot write svg: " + path);
    const int w = int(max_width) * cell_px + 80;
    const int h = int(layer_widths.size()) * (cell_px + 4) + 20;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
        << h << "\">\n";
    std::size_t offset = 0;
    for (std::size_t li = 0; li < layer_widths.size(); ++li) {
        const int y = 10 + int(li) * (cell_px + 4);
        out << "<text x=\"4\" y=\"" << y + cell_px - 1
            << "\" font-size=\"10\">L" << li << "</text>\n";
        for (std::size_t u = 0; u < layer_widths[li]; ++u) {
            out << "<rect x=\"" << 40 + int(u) * cell_px << "\" y=\"" << y
                << "\" width=\"" << cell_px << "\" height=\"" << cell_px << "\" fill=\""
                << rgb(unit_colors[offset + u]) << "\"/>\n";
        }
        offset += layer_widths[li];
    }
    out << "</svg>\n";
    if (!out) throw Error("svg write failed: " + path);
}

} // namespace sintro::svg
