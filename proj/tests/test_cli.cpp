// Drives the installed CLI binary end-to-end on a small synthetic IDX pair:
// artifact ordering, determinism, export round-trips and error reporting.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sintro/container.hpp"
#include "sintro/csv.hpp"
#include "sintro/dataset.hpp"
#include "sintro/experiments.hpp"
#include "sintro/rng.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace sintro;
namespace fs = std::filesystem;

namespace {

struct CliFixture {
    fs::path dir;
    std::string config_path;
    std::string out_dir;

    CliFixture() {
        dir = fs::temp_directory_path() / ("sintro_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        out_dir = (dir / "out").string();

        // blobby synthetic digits so the tiny classifier has signal
        Dataset data;
        auto rng = make_rng(2);
        std::normal_distribution<double> noise(0.0, 0.15);
        for (int i = 0; i < 600; ++i) {
            const int label = i % 10;
            std::vector<float> x(Dataset::kInputDim, 0.0f);
            for (int r = 0; r < 28; ++r)
                for (int c = 0; c < 28; ++c) {
                    const double dx = c - (7 + (label % 5) * 3.2);
                    const double dy = r - (7 + (label / 5) * 11.0);
                    const double v =
                        std::exp(-(dx * dx + dy * dy) / 18.0) + noise(rng) * 0.3;
                    x[std::size_t(r * 28 + c)] =
                        float(std::clamp(std::round(std::abs(v) * 255.0) / 255.0, 0.0, 1.0));
                }
            data.inputs.push_back(std::move(x));
            data.labels.push_back(label);
        }
        save_idx(data, (dir / "images").string(), (dir / "labels").string());

        config_path = (dir / "config.json").string();
        std::ofstream cfg(config_path);
        cfg << R"({
  "seed": 9,
  "out_dir": ")" << out_dir << R"(",
  "threads": 2,
  "arch": "desk",
  "data": {"images": ")" << (dir / "images").string() << R"(",
           "labels": ")" << (dir / "labels").string() << R"(",
           "train_count": 400, "val_count": 100, "test_count": 100},
  "classifier": {"cycle_length": 40, "num_cycles": 2, "lr_max": 1e-3,
                  "batch_size": 32, "dropout_keep": 0.9},
  "autoencoder": {"cycle_length": 40, "num_cycles": 2, "lr_max": 1e-3,
                   "batch_size": 32, "mmd_weight": 1000.0},
  "estimator": {"cycle_length": 40, "num_cycles": 2, "lr_max": 1e-3,
                 "batch_size": 32, "records": "val"},
  "constellation": {"sample": 3, "sigmas": [0.0, 0.1], "draws": 10},
  "attack": {"eps": 0.01, "max_steps": 10, "samples": 1}
})";
    }
    ~CliFixture() { fs::remove_all(dir); }

    int run(const std::string& args, std::string* output = nullptr) const {
        const std::string log = (dir / "cmd.log").string();
        const std::string cmd = std::string(SINTRO_CLI_PATH) + " " + args + " > " + log +
                                " 2>&1";
        const int status = std::system(cmd.c_str());
        if (output) {
            std::ifstream in(log);
            std::stringstream ss;
            ss << in.rdbuf();
            *output = ss.str();
        }
        return WEXITSTATUS(status);
    }

    std::uint64_t artifact_checksum() const {
        std::uint64_t sum = 0;
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(out_dir)) {
            const auto ext = e.path().extension().string();
            if (ext == ".sint" || ext == ".csv") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(f, std::ios::binary);
            const std::string bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
            sum ^= fnv1a_bytes(bytes.data(), bytes.size());
        }
        return sum;
    }
};

} // namespace

TEST_CASE("cli pipeline, ordering and determinism") {
    CliFixture fx;
    std::string out;

    SUBCASE("commands fail cleanly before their prerequisites exist") {
        CHECK(fx.run("estimate -c " + fx.config_path, &out) != 0);
        CHECK(out.find("train") != std::string::npos);

        CHECK(fx.run("train -c " + fx.config_path) == 0);
        CHECK(fx.run("estimate -c " + fx.config_path, &out) != 0);
        CHECK(out.find("autoencode") != std::string::npos); // names the missing stage

        CHECK(fx.run("violin -c " + fx.config_path, &out) != 0);
        CHECK(out.find("autoencode") != std::string::npos);
    }

    SUBCASE("full chain emits the violin CSV and reruns are checksum-identical") {
        for (const char* cmd : {"train", "autoencode", "estimate", "atlas", "reorder",
                                "constellation", "attack", "violin"}) {
            CAPTURE(cmd);
            CHECK(fx.run(std::string(cmd) + " -c " + fx.config_path, &out) == 0);
        }
        CHECK(fs::exists(fs::path(fx.out_dir) / "violin.csv"));
        CHECK(fs::exists(fs::path(fx.out_dir) / "classifier_sorted.sint"));
        const auto rows = csv::read((fs::path(fx.out_dir) / "violin.csv").string());
        CHECK(rows.size() == 101); // header + one row per test sample

        const std::uint64_t first = fx.artifact_checksum();
        fs::remove_all(fx.out_dir);
        for (const char* cmd : {"train", "autoencode", "estimate", "atlas", "reorder",
                                "constellation", "attack", "violin"})
            CHECK(fx.run(std::string(cmd) + " -c " + fx.config_path) == 0);
        CHECK(fx.artifact_checksum() == first);
    }

    SUBCASE("export reproduces container arrays losslessly") {
        CHECK(fx.run("train -c " + fx.config_path) == 0);
        const std::string model_path = fx.out_dir + "/classifier.sint";
        const std::string dump_path = fx.out_dir + "/dump.csv";
        CHECK(fx.run("export --artifact " + model_path + " -o " + dump_path) == 0);

        const auto container = load_container(model_path);
        const auto rows = csv::read(dump_path);
        std::size_t expect = 1;
        for (const auto& a : container.arrays) expect += a.data.size();
        CHECK(rows.size() == expect);
        // spot-check: first array value round-trips exactly
        REQUIRE(rows.size() > 1);
        CHECK(rows[1][0] == container.arrays[0].name);
        CHECK(std::stof(rows[1][2]) == container.arrays[0].data[0]);
    }

    SUBCASE("history probe feeds the training-history atlas") {
        CHECK(fx.run("train -c " + fx.config_path + " --history-probe 20") == 0);
        CHECK(fs::exists(fs::path(fx.out_dir) / "history_records.sint"));
        const auto records =
            load_records((fs::path(fx.out_dir) / "history_records.sint").string());
        CHECK(records.size() == 20 * 2); // probe size x cycles
        CHECK(records.front().cycle == 1);
        CHECK(records.back().cycle == 2);
        CHECK(fx.run("autoencode -c " + fx.config_path + " --on-history") == 0);
    }

    SUBCASE("bad inputs produce nonzero exits") {
        CHECK(fx.run("definitely-not-a-command -c " + fx.config_path, &out) != 0);
        CHECK(fx.run("train", &out) != 0); // missing --config

        const std::string bad = (fx.dir / "bad.json").string();
        std::ofstream(bad) << "{\"out_dir\": \"x\"}"; // no seed, no data
        CHECK(fx.run("train -c " + bad, &out) != 0);
        CHECK(out.find("seed") != std::string::npos);
    }
}
