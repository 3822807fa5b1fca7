#pragma once

#include "sintro/classifier.hpp"
#include "sintro/introspector.hpp"

#include <array>
#include <vector>

namespace sintro {

struct GridConfig {
    double bound = 4.0; // domain [-bound, bound]^2
    double dz = 0.1;    // node spacing

    std::size_t nodes_per_axis() const;
    double node(std::size_t i) const { return -bound + double(i) * dz; }
};

// Discretized class-conditional latent density over the truncated domain,
// renormalized so the Riemann sum (values * dz^2) equals 1.
struct DensityGrid {
    GridConfig cfg;
    int cls = -1;
    std::vector<double> values; // row-major [iy * n + ix], all >= 0

    double at(std::size_t ix, std::size_t iy) const {
        return values[iy * cfg.nodes_per_axis() + ix];
    }
    double riemann_sum() const;
};

// Gaussian KDE with per-axis Silverman bandwidth evaluated on the grid.
// Needs at least 10 points.
DensityGrid class_density(const std::vector<LatentPoint>& latents_k,
                          const GridConfig& cfg, int cls);

// Density-weighted mean position, sum z * f(z) * dz^2.
LatentPoint expected_latent(const DensityGrid& grid);

// Decoded activation pattern at e_z, de-standardized to original units.
std::vector<float> expected_activation(const AutoencoderModel& vae,
                                       const LatentPoint& e_z);

struct ExpectedPattern {
    int cls = -1;
    LatentPoint e_z;
    std::vector<float> e_h; // length N_h, original activation units
};

struct UnitAssignment {
    // Per concatenated hidden unit: class with maximal expected activation.
    std::vector<int> unit_class;
    // Per hidden layer: permutation, new position -> old index within layer.
    std::vector<std::vector<std::size_t>> layer_perm;
};

// d_i = argmax_k E[h_i|H_k] (ties to the lowest class); units within each
// layer ordered by (class asc, winning expected activation desc).
UnitAssignment sort_units(const std::vector<ExpectedPattern>& patterns,
                          const nn::NetworkSpec& classifier);

// Applies each hidden layer's permutation to rows of W_i/b_i and columns of
// W_{i+1}; the output layer keeps its row order. Network function preserved.
ClassifierModel apply_permutation(const ClassifierModel& model,
                                  const UnitAssignment& assignment);

using Rgb = std::array<double, 3>;

// Convex combination of class colors weighted by clamped expected
// activations; mid-gray when every weight is zero. Results stay in [0,1]^3.
std::vector<Rgb> brainbow(const std::vector<ExpectedPattern>& patterns,
                          const std::vector<Rgb>& palette);

} // namespace sintro
