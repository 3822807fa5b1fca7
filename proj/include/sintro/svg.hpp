#pragma once

#include "sintro/atlas.hpp"
#include "sintro/introspector.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sintro::svg {

struct ScatterPoint {
    LatentPoint z;
    int cls = 0; // palette index
};

// Generic value field on the atlas grid (e.g. estimator output), rendered as
// a background heatmap with one rect per grid node.
struct Heatmap {
    GridConfig cfg;
    std::vector<double> values;
};

struct ScatterStyle {
    double bound = 4.0; // plot domain [-bound, bound]^2
    int size_px = 640;
    double point_radius = 2.5;
    std::vector<Rgb> palette; // empty = default 10-class palette
};

const std::vector<Rgb>& default_palette();

// One circle per point, colored by class; optional heatmap background and
// polyline overlays (trajectories), with z1/z2 axes over the domain extent.
void export_scatter(const std::string& path, const std::vector<ScatterPoint>& points,
                    const ScatterStyle& style = {},
                    const Heatmap* heatmap = nullptr,
                    const std::vector<std::vector<LatentPoint>>* polylines = nullptr);

// Unit-color grid, one rectangle per hidden unit, one row per layer.
void export_brainbow(const std::string& path, const std::vector<Rgb>& unit_colors,
                     const std::vector<std::size_t>& layer_widths, int cell_px = 8);

} // namespace sintro::svg
