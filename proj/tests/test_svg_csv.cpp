#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sintro/csv.hpp"
#include "sintro/svg.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace sintro;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("sintro_svg_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

} // namespace

TEST_CASE("scatter svg: one circle per point, no polylines by default") {
    TempDir tmp;
    const std::vector<svg::ScatterPoint> pts{{{0.0, 0.0}, 0},
                                             {{1.5, -2.0}, 3},
                                             {{-3.0, 3.0}, 9}};
    svg::export_scatter(tmp.file("s.svg"), pts);
    const std::string body = slurp(tmp.file("s.svg"));
    CHECK(count_occurrences(body, "<circle") == 3);
    CHECK(count_occurrences(body, "<polyline") == 0);
    CHECK(body.find("z1") != std::string::npos);
    CHECK(body.find("z2") != std::string::npos);
}

TEST_CASE("scatter svg: heatmap rect count equals grid resolution") {
    TempDir tmp;
    svg::Heatmap heat;
    heat.cfg = GridConfig{2.0, 0.5}; // 9x9 nodes
    const std::size_t nodes = heat.cfg.nodes_per_axis();
    heat.values.assign(nodes * nodes, 0.0);
    for (std::size_t i = 0; i < heat.values.size(); ++i) heat.values[i] = double(i);

    std::vector<std::vector<LatentPoint>> lines{{{0.0, 0.0}, {1.0, 1.0}}, {}};
    svg::export_scatter(tmp.file("h.svg"), {}, {}, &heat, &lines);
    const std::string body = slurp(tmp.file("h.svg"));
    // one frame rect + nodes^2 heatmap rects
    CHECK(count_occurrences(body, "<rect") == nodes * nodes + 1);
    CHECK(count_occurrences(body, "<polyline") == 1); // the empty line is skipped
    CHECK(count_occurrences(body, "<circle") == 0);
}

TEST_CASE("brainbow svg: one rect per unit") {
    TempDir tmp;
    std::vector<Rgb> colors(10, Rgb{0.2, 0.4, 0.6});
    svg::export_brainbow(tmp.file("b.svg"), colors, {6, 4});
    const std::string body = slurp(tmp.file("b.svg"));
    CHECK(count_occurrences(body, "<rect") == 10);
    CHECK_THROWS_AS(svg::export_brainbow(tmp.file("x.svg"), colors, {6, 5}), Error);
}

TEST_CASE("csv writer and reader round-trip") {
    TempDir tmp;
    {
        csv::Writer w(tmp.file("t.csv"), {"a", "b", "c"});
        w.row({"1", csv::fmt(2.5), csv::fmt(float(0.1f))});
        w.row({"x", "y", "z"});
        CHECK_THROWS_AS(w.row({"too", "short"}), Error);
    }
    const auto rows = csv::read(tmp.file("t.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
    CHECK(rows[1][1] == "2.5");
    CHECK(std::stof(rows[1][2]) == 0.1f);
}

TEST_CASE("csv fmt round-trips doubles and floats") {
    for (double v : {0.1, 1.0 / 3.0, -2.7e-12, 96.57, 0.0}) {
        CHECK(std::stod(csv::fmt(v)) == v);
    }
    for (float v : {0.1f, 2.0f / 3.0f, -5.4e-7f}) {
        CHECK(std::stof(csv::fmt(v)) == v);
    }
}
