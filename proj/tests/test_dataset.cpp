#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sintro/dataset.hpp"
#include "sintro/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

using namespace sintro;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("sintro_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void put_u32_be(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {(unsigned char)(v >> 24), (unsigned char)(v >> 16),
                                (unsigned char)(v >> 8), (unsigned char)v};
    out.write(reinterpret_cast<const char*>(b), 4);
}

// Hand-encoded 3-image fixture with pixel byte (i * 7 + p) % 256.
void write_fixture(const std::string& images, const std::string& labels,
                   std::uint32_t img_magic = 0x803, std::uint32_t n_labels = 3) {
    std::ofstream img(images, std::ios::binary);
    put_u32_be(img, img_magic);
    put_u32_be(img, 3);
    put_u32_be(img, 28);
    put_u32_be(img, 28);
    for (std::uint32_t i = 0; i < 3; ++i)
        for (std::uint32_t p = 0; p < 784; ++p) img.put(char((i * 7 + p) % 256));
    std::ofstream lab(labels, std::ios::binary);
    put_u32_be(lab, 0x801);
    put_u32_be(lab, n_labels);
    for (std::uint32_t i = 0; i < n_labels; ++i) lab.put(char(i % 10));
}

Dataset synthetic_mnist_like(std::size_t n, std::uint64_t seed) {
    Dataset data;
    auto rng = make_rng(seed);
    std::uniform_int_distribution<int> lab(0, 9);
    std::uniform_real_distribution<float> px(0.0f, 1.0f);
    data.inputs.resize(n);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        data.labels[i] = lab(rng);
        data.inputs[i].resize(Dataset::kInputDim);
        for (auto& v : data.inputs[i]) v = px(rng);
    }
    return data;
}

} // namespace

TEST_CASE("load_idx parses a hand-built fixture byte-exactly") {
    TempDir tmp;
    write_fixture(tmp.file("img"), tmp.file("lab"));
    const Dataset data = load_idx(tmp.file("img"), tmp.file("lab"));
    REQUIRE(data.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(data.inputs[i].size() == 784);
        for (std::size_t p = 0; p < 784; ++p)
            CHECK(data.inputs[i][p] == float((i * 7 + p) % 256) / 255.0f);
        CHECK(data.labels[i] == int(i));
    }
    const auto y = data.one_hot(1);
    CHECK(y[1] == 1.0f);
    CHECK(y[0] == 0.0f);
}

TEST_CASE("load_idx rejects bad magic, truncation and count mismatch") {
    TempDir tmp;
    write_fixture(tmp.file("img_badmagic"), tmp.file("lab1"), 0x802);
    CHECK_THROWS_WITH_AS((void)load_idx(tmp.file("img_badmagic"), tmp.file("lab1")),
                         doctest::Contains("magic"), Error);

    write_fixture(tmp.file("img2"), tmp.file("lab2"), 0x803, 2);
    CHECK_THROWS_WITH_AS((void)load_idx(tmp.file("img2"), tmp.file("lab2")),
                         doctest::Contains("count"), Error);

    write_fixture(tmp.file("img3"), tmp.file("lab3"));
    std::filesystem::resize_file(tmp.file("img3"), 16 + 784 * 2 + 100);
    CHECK_THROWS_WITH_AS((void)load_idx(tmp.file("img3"), tmp.file("lab3")),
                         doctest::Contains("offset"), Error);
}

TEST_CASE("idx round-trip preserves data exactly") {
    TempDir tmp;
    const Dataset data = synthetic_mnist_like(50, 5);
    // quantize to byte grid first so the round-trip is exact
    Dataset quant = data;
    for (auto& x : quant.inputs)
        for (auto& v : x) v = float(std::lround(v * 255.0f)) / 255.0f;
    save_idx(quant, tmp.file("img"), tmp.file("lab"));
    const Dataset back = load_idx(tmp.file("img"), tmp.file("lab"));
    REQUIRE(back.size() == quant.size());
    CHECK(back.labels == quant.labels);
    for (std::size_t i = 0; i < quant.size(); ++i) CHECK(back.inputs[i] == quant.inputs[i]);
}

TEST_CASE("split is deterministic, disjoint and covers the request") {
    const Dataset data = synthetic_mnist_like(200, 11);
    const SplitSpec spec{10, 5, 5, 7};
    const Split a = split(data, spec);
    const Split b = split(data, spec);
    CHECK(a.train_idx == b.train_idx);
    CHECK(a.val_idx == b.val_idx);
    CHECK(a.test_idx == b.test_idx);
    CHECK(a.train.size() == 10);
    CHECK(a.val.size() == 5);
    CHECK(a.test.size() == 5);

    std::set<std::size_t> all;
    for (const auto* v : {&a.train_idx, &a.val_idx, &a.test_idx})
        for (std::size_t i : *v) {
            CHECK(all.insert(i).second); // pairwise disjoint
            CHECK(i < data.size());
        }
    CHECK(all.size() == 20);

    CHECK_THROWS_AS((void)split(data, SplitSpec{150, 40, 40, 1}), Error);
}

TEST_CASE("stratified split keeps class proportions within 2 points") {
    const Dataset data = synthetic_mnist_like(6000, 23);
    std::array<double, 10> global{};
    for (int l : data.labels) global[std::size_t(l)] += 1.0;
    for (auto& g : global) g /= double(data.size());

    const Split s = split(data, SplitSpec{4000, 1000, 1000, 3});
    for (const Dataset* part : {&s.train, &s.val, &s.test}) {
        std::array<double, 10> freq{};
        for (int l : part->labels) freq[std::size_t(l)] += 1.0;
        for (std::size_t k = 0; k < 10; ++k)
            CHECK(std::abs(freq[k] / double(part->size()) - global[k]) < 0.02);
    }
}

TEST_CASE("add_awgn: zero sigma returns the input unchanged") {
    auto rng = make_rng(1);
    const std::vector<float> x{0.1f, 0.9f, 0.5f};
    CHECK(add_awgn(x, 0.0, rng) == x);
    CHECK_THROWS_AS((void)add_awgn(x, -0.1, rng), Error);
}

TEST_CASE("add_awgn: Monte Carlo mean and variance") {
    auto rng = make_rng(99);
    const std::vector<float> x(8, 0.25f);
    const double sigma = 0.3;
    const int draws = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto noisy = add_awgn(x, sigma, rng);
        const double d = double(noisy[std::size_t(i) % x.size()]) - 0.25;
        sum += d;
        sum_sq += d * d;
    }
    const double mean = sum / draws;
    const double var = sum_sq / draws - mean * mean;
    CHECK(std::abs(mean) < 3.0 * sigma / std::sqrt(double(draws)));
    CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.05));
}

TEST_CASE("hausdorff distance basics") {
    const std::vector<std::vector<double>> A{{0, 0}, {1, 0}};
    const std::vector<std::vector<double>> B{{0, 0}};
    const std::vector<std::vector<double>> C{{3, 4}};
    CHECK(hausdorff_distance(A, A) == 0.0);
    CHECK(hausdorff_distance(B, C) == doctest::Approx(5.0));
    CHECK(hausdorff_distance(A, B) == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)hausdorff_distance({}, A), Error);
}

TEST_CASE("hausdorff distance: symmetry and triangle inequality") {
    auto rng = make_rng(13);
    std::uniform_real_distribution<double> d(-2, 2);
    std::uniform_int_distribution<std::size_t> count(1, 12);
    for (int trial = 0; trial < 25; ++trial) {
        auto cloud = [&]() {
            std::vector<std::vector<double>> pts(count(rng));
            for (auto& p : pts) p = {d(rng), d(rng), d(rng)};
            return pts;
        };
        const auto A = cloud(), B = cloud(), C = cloud();
        const double ab = hausdorff_distance(A, B);
        const double ba = hausdorff_distance(B, A);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab <= hausdorff_distance(A, C) + hausdorff_distance(C, B) + 1e-12);
    }
}
