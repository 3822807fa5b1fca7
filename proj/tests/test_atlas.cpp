#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sintro/atlas.hpp"
#include "sintro/rng.hpp"

#include <cmath>

using namespace sintro;

namespace {

std::vector<LatentPoint> gaussian_cloud(std::size_t n, double cx, double cy,
                                        double sd, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> d(0.0, sd);
    std::vector<LatentPoint> pts(n);
    for (auto& p : pts) p = {cx + d(rng), cy + d(rng)};
    return pts;
}

// Brute-force KDE oracle with its own bandwidth computation and
// renormalization, evaluated over the full grid.
std::vector<double> kde_oracle(const std::vector<LatentPoint>& pts, const GridConfig& cfg) {
    const double n = double(pts.size());
    double m1 = 0, m2 = 0;
    for (const auto& p : pts) {
        m1 += p.z1;
        m2 += p.z2;
    }
    m1 /= n;
    m2 /= n;
    double v1 = 0, v2 = 0;
    for (const auto& p : pts) {
        v1 += (p.z1 - m1) * (p.z1 - m1);
        v2 += (p.z2 - m2) * (p.z2 - m2);
    }
    const double h1 = std::max(std::sqrt(v1 / n) * std::pow(n, -1.0 / 6.0), 1e-9);
    const double h2 = std::max(std::sqrt(v2 / n) * std::pow(n, -1.0 / 6.0), 1e-9);
    const std::size_t nodes = cfg.nodes_per_axis();
    std::vector<double> vals(nodes * nodes, 0.0);
    for (std::size_t iy = 0; iy < nodes; ++iy)
        for (std::size_t ix = 0; ix < nodes; ++ix) {
            double s = 0.0;
            for (const auto& p : pts) {
                const double dx = (cfg.node(ix) - p.z1) / h1;
                const double dy = (cfg.node(iy) - p.z2) / h2;
                s += std::exp(-0.5 * (dx * dx + dy * dy));
            }
            vals[iy * nodes + ix] = s / (n * 2.0 * M_PI * h1 * h2);
        }
    double mass = 0.0;
    for (double v : vals) mass += v;
    mass *= cfg.dz * cfg.dz;
    for (auto& v : vals) v /= mass;
    return vals;
}

ExpectedPattern pattern(int cls, std::vector<float> e_h) {
    ExpectedPattern p;
    p.cls = cls;
    p.e_h = std::move(e_h);
    return p;
}

} // namespace

TEST_CASE("grid geometry") {
    GridConfig cfg;
    CHECK(cfg.nodes_per_axis() == 81);
    CHECK(cfg.node(0) == doctest::Approx(-4.0));
    CHECK(cfg.node(80) == doctest::Approx(4.0));
    CHECK(cfg.node(40) == doctest::Approx(0.0));
}

TEST_CASE("class_density renormalizes to unit Riemann sum") {
    const auto pts = gaussian_cloud(500, 0.3, -0.5, 0.8, 5);
    const auto grid = class_density(pts, {}, 3);
    CHECK(grid.cls == 3);
    CHECK(grid.riemann_sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : grid.values) CHECK(v >= 0.0);
    CHECK_THROWS_AS((void)class_density(gaussian_cloud(5, 0, 0, 1, 1), {}, 0), Error);
}

TEST_CASE("degenerate cloud concentrates mass at its node") {
    // all points at a grid node; sample sd = 0 forces the bandwidth floor
    std::vector<LatentPoint> pts(50, LatentPoint{1.0, -2.0});
    const auto grid = class_density(pts, {}, 0);
    const auto ez = expected_latent(grid);
    CHECK(ez.z1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ez.z2 == doctest::Approx(-2.0).epsilon(1e-9));
    // essentially all mass on one node
    const double peak = *std::max_element(grid.values.begin(), grid.values.end());
    CHECK(peak * grid.cfg.dz * grid.cfg.dz == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("class_density matches the brute-force oracle") {
    const auto pts = gaussian_cloud(200, -0.7, 0.4, 0.6, 8);
    const GridConfig cfg{2.0, 0.25};
    const auto grid = class_density(pts, cfg, 1);
    const auto oracle = kde_oracle(pts, cfg);
    REQUIRE(grid.values.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i)
        CHECK(grid.values[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
}

TEST_CASE("expected_latent of a symmetric density is the origin") {
    GridConfig cfg{2.0, 0.5};
    DensityGrid grid;
    grid.cfg = cfg;
    const std::size_t nodes = cfg.nodes_per_axis();
    grid.values.assign(nodes * nodes, 0.0);
    // symmetric two-point mass
    grid.values[2 * nodes + 2] = 1.0;
    grid.values[(nodes - 3) * nodes + (nodes - 3)] = 1.0;
    const double mass = grid.riemann_sum();
    for (auto& v : grid.values) v /= mass;
    const auto ez = expected_latent(grid);
    CHECK(std::abs(ez.z1) < 1e-12);
    CHECK(std::abs(ez.z2) < 1e-12);
}

TEST_CASE("expected_latent tracks the empirical mean") {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        const auto pts = gaussian_cloud(400, 0.8, -1.1, 0.7, seed);
        const auto grid = class_density(pts, {}, 0);
        const auto ez = expected_latent(grid);
        double mx = 0, my = 0;
        for (const auto& p : pts) {
            mx += p.z1;
            my += p.z2;
        }
        mx /= double(pts.size());
        my /= double(pts.size());
        const double err = std::hypot(ez.z1 - mx, ez.z2 - my);
        CHECK(err <= 0.1);
    }
}

TEST_CASE("sort_units assigns argmax classes with deterministic ties") {
    nn::NetworkSpec spec = nn::make_mlp_spec(4, 2, 3, 10, nn::Activation::Sigmoid);
    // 6 hidden units, 10 classes
    std::vector<ExpectedPattern> patterns;
    for (int k = 0; k < 10; ++k) {
        std::vector<float> e_h(6, 0.0f);
        if (k == 7) e_h[0] = 1.0f;       // unit 0 -> class 7
        if (k == 2) e_h[1] = 0.5f;       // unit 1 -> class 2
        e_h[2] = 0.25f;                  // unit 2 ties across all -> class 0
        if (k == 1) e_h[3] = 2.0f;       // unit 3 -> class 1
        if (k == 1) e_h[4] = 1.0f;       // unit 4 -> class 1, weaker
        if (k == 0) e_h[5] = 0.1f;       // unit 5 -> class 0
        patterns.push_back(pattern(k, std::move(e_h)));
    }
    const auto assign = sort_units(patterns, spec);
    CHECK(assign.unit_class == std::vector<int>{7, 2, 0, 1, 1, 0});
    REQUIRE(assign.layer_perm.size() == 2);
    // layer 0 (units 0..2): class order 0 (unit 2), 2 (unit 1), 7 (unit 0)
    CHECK(assign.layer_perm[0] == std::vector<std::size_t>{2, 1, 0});
    // layer 1 (units 3..5): class 0 (unit 5), then class 1 by strength (3, 4)
    CHECK(assign.layer_perm[1] == std::vector<std::size_t>{2, 0, 1});
}

TEST_CASE("sort_units is invariant under positive rescaling") {
    nn::NetworkSpec spec = nn::make_mlp_spec(4, 1, 5, 10, nn::Activation::Sigmoid);
    auto rng = make_rng(31);
    std::uniform_real_distribution<double> d(-1.0, 2.0);
    std::vector<ExpectedPattern> patterns;
    for (int k = 0; k < 10; ++k) {
        std::vector<float> e_h(5);
        for (auto& v : e_h) v = float(d(rng));
        patterns.push_back(pattern(k, std::move(e_h)));
    }
    const auto base = sort_units(patterns, spec);
    auto scaled = patterns;
    for (auto& p : scaled)
        for (auto& v : p.e_h) v *= 37.5f;
    const auto rescaled = sort_units(scaled, spec);
    CHECK(base.unit_class == rescaled.unit_class);
    CHECK(base.layer_perm == rescaled.layer_perm);
}

TEST_CASE("apply_permutation: identity, function preservation, inverse") {
    auto spec = nn::make_mlp_spec(6, 3, 8, 4, nn::Activation::Sigmoid);
    ClassifierModel model;
    model.spec = spec;
    model.params = nn::init_params<float>(spec, 3);

    UnitAssignment identity;
    identity.unit_class.assign(24, 0);
    for (int li = 0; li < 3; ++li) {
        std::vector<std::size_t> perm(8);
        std::iota(perm.begin(), perm.end(), std::size_t(0));
        identity.layer_perm.push_back(perm);
    }
    const auto same = apply_permutation(model, identity);
    for (std::size_t li = 0; li < model.params.layers.size(); ++li) {
        CHECK(same.params.layers[li].W == model.params.layers[li].W);
        CHECK(same.params.layers[li].b == model.params.layers[li].b);
    }

    UnitAssignment shuffled = identity;
    auto rng = make_rng(4);
    for (auto& perm : shuffled.layer_perm) std::shuffle(perm.begin(), perm.end(), rng);

    const auto permuted = apply_permutation(model, shuffled);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<float> x(6);
        for (auto& v : x) v = float(d(rng));
        const auto y0 = nn::forward(spec, model.params, x).output;
        const auto y1 = nn::forward(spec, permuted.params, x).output;
        for (std::size_t u = 0; u < y0.size(); ++u)
            CHECK(std::abs(y0[u] - y1[u]) < 1e-5f);
    }

    // inverse permutation restores parameters exactly
    UnitAssignment inverse = shuffled;
    for (std::size_t li = 0; li < shuffled.layer_perm.size(); ++li)
        for (std::size_t fresh = 0; fresh < shuffled.layer_perm[li].size(); ++fresh)
            inverse.layer_perm[li][shuffled.layer_perm[li][fresh]] = fresh;
    const auto restored = apply_permutation(permuted, inverse);
    for (std::size_t li = 0; li < model.params.layers.size(); ++li) {
        CHECK(restored.params.layers[li].W == model.params.layers[li].W);
        CHECK(restored.params.layers[li].b == model.params.layers[li].b);
    }

    UnitAssignment bad = identity;
    bad.layer_perm[0][0] = 3;
    bad.layer_perm[0][1] = 3;
    CHECK_THROWS_AS((void)apply_permutation(model, bad), Error);
}

TEST_CASE("brainbow color rules") {
    std::vector<ExpectedPattern> patterns;
    std::vector<Rgb> palette;
    // two classes: red and blue
    patterns.push_back(pattern(0, {1.0f, 1.0f, 1.0f, 0.0f, -1.0f}));
    patterns.push_back(pattern(1, {0.0f, 1.0f, 3.0f, 0.0f, -0.5f}));
    palette.push_back({1.0, 0.0, 0.0});
    palette.push_back({0.0, 0.0, 1.0});

    const auto colors = brainbow(patterns, palette);
    REQUIRE(colors.size() == 5);
    // unit 0 responds only to class 0 -> exactly red
    CHECK(colors[0] == Rgb{1.0, 0.0, 0.0});
    // unit 1 responds equally -> mean of palette
    CHECK(colors[1][0] == doctest::Approx(0.5));
    CHECK(colors[1][2] == doctest::Approx(0.5));
    // unit 2: weights (1, 3) -> 0.25 red + 0.75 blue
    CHECK(colors[2][0] == doctest::Approx(0.25));
    CHECK(colors[2][2] == doctest::Approx(0.75));
    // unit 3: zero weights -> mid gray; unit 4: negatives clamp to gray too
    CHECK(colors[3] == Rgb{0.5, 0.5, 0.5});
    CHECK(colors[4] == Rgb{0.5, 0.5, 0.5});
    for (const auto& c : colors)
        for (double v : c) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }

    CHECK_THROWS_AS((void)brainbow(patterns, std::vector<Rgb>(3)), Error);
}
