#include "sintro/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sintro {

std::size_t GridConfig::nodes_per_axis() const {
    if (!(bound > 0.0) || !(dz > 0.0)) throw Error("GridConfig: bad bounds");
    return std::size_t(std::llround(2.0 * bound / dz)) + 1;
}

double DensityGrid::riemann_sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * cfg.dz * cfg.dz;
}

DensityGrid class_density(const std::vector<LatentPoint>& latents_k,
                          const GridConfig& cfg, int cls) {
    if (latents_k.size() < 10)
        throw Error("class_density: need at least 10 points, got " +
                    std::to_string(latents_k.size()));
    const std::size_t n = latents_k.size();

    // Silverman bandwidth per axis; the (4/(d+2))^(1/(d+4)) factor is 1 at
    // d = 2, leaving h_j = sigma_j * n^(-1/6).
    double m1 = 0.0, m2 = 0.0;
    for (const auto& z : latents_k) {
        m1 += z.z1;
        m2 += z.z2;
    }
    m1 /= double(n);
    m2 /= double(n);
    double v1 = 0.0, v2 = 0.0;
    for (const auto& z : latents_k) {
        v1 += (z.z1 - m1) * (z.z1 - m1);
        v2 += (z.z2 - m2) * (z.z2 - m2);
    }
    const double nf = std::pow(double(n), -1.0 / 6.0);
    const double h1 = std::max(std::sqrt(v1 / double(n)) * nf, 1e-9);
    const double h2 = std::max(std::sqrt(v2 / double(n)) * nf, 1e-9);

    DensityGrid grid;
    grid.cfg = cfg;
    grid.cls = cls;
    const std::size_t nodes = cfg.nodes_per_axis();
    grid.values.assign(nodes * nodes, 0.0);

    const double norm = 1.0 / (double(n) * 2.0 * M_PI * h1 * h2);
    for (std::size_t iy = 0; iy < nodes; ++iy) {
        const double zy = cfg.node(iy);
        for (std::size_t ix = 0; ix < nodes; ++ix) {
            const double zx = cfg.node(ix);
            double s = 0.0;
            for (const auto& p : latents_k) {
                const double dx = (zx - p.z1) / h1;
                const double dy = (zy - p.z2) / h2;
                s += std::exp(-0.5 * (dx * dx + dy * dy));
            }
            grid.values[iy * nodes + ix] = norm * s;
        }
    }

    const double mass = grid.riemann_sum();
    if (!(mass > 0.0)) throw Error("class_density: zero mass on grid");
    for (auto& v : grid.values) v /= mass;
    return grid;
}

LatentPoint expected_latent(const DensityGrid& grid) {
    const std::size_t nodes = grid.cfg.nodes_per_axis();
    const double cell = grid.cfg.dz * grid.cfg.dz;
    double ex = 0.0, ey = 0.0;
    for (std::size_t iy = 0; iy < nodes; ++iy)
        for (std::size_t ix = 0; ix < nodes; ++ix) {
            const double w = grid.at(ix, iy) * cell;
            ex += grid.cfg.node(ix) * w;
            ey += grid.cfg.node(iy) * w;
        }
    return {ex, ey};
}

std::vector<float> expected_activation(const AutoencoderModel& vae,
                                       const LatentPoint& e_z) {
    return destandardize(vae, decode(vae, e_z));
}

UnitAssignment sort_units(const std::vector<ExpectedPattern>& patterns,
                          const nn::NetworkSpec& classifier) {
    if (patterns.empty()) throw Error("sort_units: no patterns");
    const std::size_t total = classifier.hidden_width_total();
    for (const auto& p : patterns)
        if (p.e_h.size() != total)
            throw Error("sort_units: pattern width mismatch");

    UnitAssignment out;
    out.unit_class.resize(total);
    std::vector<double> winning(total);
    for (std::size_t i = 0; i < total; ++i) {
        int best = 0;
        double best_v = double(patterns[0].e_h[i]);
        for (std::size_t k = 1; k < patterns.size(); ++k) {
            const double v = double(patterns[k].e_h[i]);
            if (v > best_v) {
                best_v = v;
                best = int(k);
            }
        }
        out.unit_class[i] = patterns[std::size_t(best)].cls;
        winning[i] = best_v;
    }

    std::size_t offset = 0;
    for (std::size_t li = 0; li + 1 < classifier.layers.size(); ++li) {
        const std::size_t width = classifier.layers[li].out;
        std::vector<std::size_t> perm(width);
        std::iota(perm.begin(), perm.end(), std::size_t(0));
        std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
            const int ca = out.unit_class[offset + a];
            const int cb = out.unit_class[offset + b];
            if (ca != cb) return ca < cb;
            return winning[offset + a] > winning[offset + b];
        });
        out.layer_perm.push_back(std::move(perm));
        offset += width;
    }
    return out;
}

ClassifierModel apply_permutation(const ClassifierModel& model,
                                  const UnitAssignment& assignment) {
    const auto& spec = model.spec;
    const std::size_t hidden_layers = spec.layers.size() - 1;
    if (assignment.layer_perm.size() != hidden_layers)
        throw Error("apply_permutation: permutation count mismatch");

    ClassifierModel out = model;
    for (std::size_t li = 0; li < hidden_layers; ++li) {
        const auto& perm = assignment.layer_perm[li];
        const std::size_t width = spec.layers[li].out;
        if (perm.size() != width)
            throw Error("apply_permutation: bad permutation width at layer " +
                        std::to_string(li));
        std::vector<bool> seen(width, false);
        for (std::size_t p : perm) {
            if (p >= width || seen[p])
                throw Error("apply_permutation: not a bijection at layer " +
                            std::to_string(li));
            seen[p] = true;
        }

        // Layer li may already carry a column permutation from step li-1, so
        // permute rows of the current state, not the original.
        const auto cur_W = out.params.layers[li].W;
        const auto cur_b = out.params.layers[li].b;
        const std::size_t in_w = spec.layers[li].in;
        for (std::size_t r = 0; r < width; ++r) {
            const std::size_t old_r = perm[r];
            std::copy(cur_W.begin() + std::ptrdiff_t(old_r * in_w),
                      cur_W.begin() + std::ptrdiff_t((old_r + 1) * in_w),
                      out.params.layers[li].W.begin() + std::ptrdiff_t(r * in_w));
            out.params.layers[li].b[r] = cur_b[old_r];
        }

        // Columns of the consumer layer follow the same reordering.
        auto& next = out.params.layers[li + 1];
        const std::size_t next_out = spec.layers[li + 1].out;
        const auto next_W = next.W;
        for (std::size_t r = 0; r < next_out; ++r)
            for (std::size_t c = 0; c < width; ++c)
                next.W[r * width + c] = next_W[r * width + perm[c]];
    }
    return out;
}

std::vector<Rgb> brainbow(const std::vector<ExpectedPattern>& patterns,
                          const std::vector<Rgb>& palette) {
    if (patterns.empty()) throw Error("brainbow: no patterns");
    if (palette.size() != patterns.size())
        throw Error("brainbow: palette size " + std::to_string(palette.size()) +
                    " != class count " + std::to_string(patterns.size()));
    const std::size_t total = patterns.front().e_h.size();
    std::vector<Rgb> colors(total);
    for (std::size_t i = 0; i < total; ++i) {
        double wsum = 0.0;
        Rgb acc{0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < patterns.size(); ++k) {
            const double w = std::max(double(patterns[k].e_h[i]), 0.0);
            wsum += w;
            for (int c = 0; c < 3; ++c) acc[c] += w * palette[k][c];
        }
        if (wsum > 0.0) {
            for (int c = 0; c < 3; ++c) acc[c] /= wsum;
            colors[i] = acc;
        } else {
            colors[i] = {0.5, 0.5, 0.5};
        }
    }
    return colors;
}

} // namespace sintro
