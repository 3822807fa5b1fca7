// Command-line front end: drives the classifier -> autoencoder -> estimator
// pipeline and exports the analysis artifacts (atlases, constellations,
// attack trajectories, violin data) as CSV/SVG.

#include "sintro/atlas.hpp"
#include "sintro/classifier.hpp"
#include "sintro/container.hpp"
#include "sintro/csv.hpp"
#include "sintro/dataset.hpp"
#include "sintro/experiments.hpp"
#include "sintro/introspector.hpp"
#include "sintro/rng.hpp"
#include "sintro/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace sintro;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct DataConfig {
    std::string images;
    std::string labels;
    std::size_t train_count = 8000;
    std::size_t val_count = 1000;
    std::size_t test_count = 1000;
};

struct ConstellationConfig {
    std::size_t sample = 907;
    std::vector<double> sigmas{0.0, 0.1, 0.2, 0.3};
    std::size_t draws = 200;
};

struct AttackConfig {
    double eps = 0.01;
    std::size_t max_steps = 100;
    std::size_t samples = 6;
    bool continue_after_success = false;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::size_t threads = 0;
    std::string arch = "desk";
    DataConfig data;
    nn::TrainConfig classifier;
    nn::TrainConfig autoencoder;
    double mmd_weight = 1.0;
    nn::TrainConfig estimator;
    double error_floor = 1e-8;
    std::string estimator_records = "train"; // train | val | train+val
    GridConfig atlas;
    ConstellationConfig constellation;
    AttackConfig attack;
    double noise_sigma_max = 1.0;

    json raw; // as parsed, for hashing/logging
};

void read_train_config(const json& j, nn::TrainConfig& cfg) {
    cfg.cycle_length = j.value("cycle_length", cfg.cycle_length);
    cfg.num_cycles = j.value("num_cycles", cfg.num_cycles);
    cfg.lr_min = j.value("lr_min", cfg.lr_min);
    cfg.lr_max = j.value("lr_max", cfg.lr_max);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.dropout_keep = j.value("dropout_keep", cfg.dropout_keep);
    cfg.adam.beta1 = j.value("beta1", cfg.adam.beta1);
    cfg.adam.beta2 = j.value("beta2", cfg.adam.beta2);
    cfg.adam.eps_hat = j.value("eps_hat", cfg.adam.eps_hat);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("config parse failed: " + std::string(e.what()));
    }

    RunConfig cfg;
    cfg.raw = j;
    if (!j.contains("seed")) throw Error("config: \"seed\" is mandatory");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.arch = j.value("arch", cfg.arch);
    if (cfg.arch != "desk" && cfg.arch != "paper")
        throw Error("config: arch must be \"desk\" or \"paper\"");

    const json& d = j.at("data");
    cfg.data.images = d.at("images").get<std::string>();
    cfg.data.labels = d.at("labels").get<std::string>();
    cfg.data.train_count = d.value("train_count", cfg.data.train_count);
    cfg.data.val_count = d.value("val_count", cfg.data.val_count);
    cfg.data.test_count = d.value("test_count", cfg.data.test_count);

    cfg.classifier.dropout_keep = 0.9;
    cfg.classifier.lr_max = 3e-4;
    cfg.classifier.batch_size = 128;
    if (j.contains("classifier")) read_train_config(j["classifier"], cfg.classifier);

    cfg.autoencoder.dropout_keep = 0.9;
    cfg.autoencoder.lr_max = 1e-3;
    cfg.autoencoder.batch_size = 128;
    if (j.contains("autoencoder")) {
        read_train_config(j["autoencoder"], cfg.autoencoder);
        cfg.mmd_weight = j["autoencoder"].value("mmd_weight", cfg.mmd_weight);
    }

    cfg.estimator.dropout_keep = 0.9;
    cfg.estimator.lr_max = 1e-3;
    cfg.estimator.batch_size = 32;
    if (j.contains("estimator")) {
        read_train_config(j["estimator"], cfg.estimator);
        cfg.error_floor = j["estimator"].value("error_floor", cfg.error_floor);
        cfg.estimator_records = j["estimator"].value("records", cfg.estimator_records);
        if (cfg.estimator_records != "train" && cfg.estimator_records != "val" &&
            cfg.estimator_records != "train+val")
            throw Error("config: estimator.records must be train, val or train+val");
    }

    if (j.contains("atlas")) {
        cfg.atlas.bound = j["atlas"].value("bound", cfg.atlas.bound);
        cfg.atlas.dz = j["atlas"].value("dz", cfg.atlas.dz);
    }
    if (j.contains("constellation")) {
        const json& c = j["constellation"];
        cfg.constellation.sample = c.value("sample", cfg.constellation.sample);
        if (c.contains("sigmas"))
            cfg.constellation.sigmas = c["sigmas"].get<std::vector<double>>();
        cfg.constellation.draws = c.value("draws", cfg.constellation.draws);
    }
    if (j.contains("attack")) {
        const json& a = j["attack"];
        cfg.attack.eps = a.value("eps", cfg.attack.eps);
        cfg.attack.max_steps = a.value("max_steps", cfg.attack.max_steps);
        cfg.attack.samples = a.value("samples", cfg.attack.samples);
        cfg.attack.continue_after_success =
            a.value("continue_after_success", cfg.attack.continue_after_success);
    }
    if (j.contains("noise_train"))
        cfg.noise_sigma_max = j["noise_train"].value("sigma_max", cfg.noise_sigma_max);

    // one shared seed and thread count in every stage
    for (nn::TrainConfig* t : {&cfg.classifier, &cfg.autoencoder, &cfg.estimator}) {
        t->seed = cfg.seed;
        t->threads = cfg.threads;
        t->validate();
    }
    return cfg;
}

struct Paths {
    fs::path out;
    explicit Paths(const RunConfig& cfg) : out(cfg.out_dir) {}
    std::string classifier() const { return (out / "classifier.sint").string(); }
    std::string classifier_noise() const { return (out / "classifier_noise.sint").string(); }
    std::string classifier_sorted() const { return (out / "classifier_sorted.sint").string(); }
    std::string autoencoder() const { return (out / "autoencoder.sint").string(); }
    std::string estimator() const { return (out / "estimator.sint").string(); }
    std::string history_records() const { return (out / "history_records.sint").string(); }
    std::string in_out(const std::string& name) const { return (out / name).string(); }
};

// Prerequisite loads fail with the stage that produces the artifact, so the
// user knows which command to run first.
template <typename Load>
auto need(const std::string& path, const std::string& stage, Load load) {
    if (!fs::exists(path))
        throw Error("missing prerequisite artifact \"" + stage + "\" (" + path +
                    "); run `sintro " + stage + "` first");
    return load(path);
}

Split load_split(const RunConfig& cfg) {
    const Dataset data = load_idx(cfg.data.images, cfg.data.labels);
    return split(data, SplitSpec{cfg.data.train_count, cfg.data.val_count,
                                 cfg.data.test_count, cfg.seed});
}

nn::NetworkSpec arch_spec(const RunConfig& cfg) {
    return classifier_spec(cfg.arch == "paper" ? Arch::Paper : Arch::Desk,
                           cfg.classifier.dropout_keep);
}

void write_runlog(const RunConfig& cfg, const std::string& command,
                  const std::vector<std::string>& artifacts) {
    const std::string dump = cfg.raw.dump();
    json log;
    log["command"] = command;
    log["version"] = kVersion;
    log["seed"] = cfg.seed;
    log["config_hash"] =
        fnv1a_bytes(dump.data(), dump.size());
    log["artifacts"] = artifacts;
    std::ofstream out(Paths(cfg).in_out("runlog_" + command + ".json"));
    out << log.dump(2) << "\n";
}

std::vector<std::string> split_history_csv(const ClassifierModel& model,
                                           const RunConfig& cfg) {
    const std::string path = Paths(cfg).in_out("history.csv");
    csv::Writer w(path, {"cycle", "train_error", "val_error", "test_accuracy"});
    for (const auto& s : model.history)
        w.row({std::to_string(s.cycle), csv::fmt(s.train_error), csv::fmt(s.val_error),
               csv::fmt(s.test_accuracy)});
    return {path};
}

// ---- subcommands ----

int cmd_train(const RunConfig& cfg, double noise_inject, std::size_t history_probe) {
    const Split parts = load_split(cfg);
    TrainClassifierOptions opts;
    opts.noise_sigma_max = noise_inject;
    Dataset probe;
    std::vector<ActivationRecord> probe_history;
    if (history_probe > 0) {
        const std::size_t n = std::min(history_probe, parts.test.size());
        probe.inputs.assign(parts.test.inputs.begin(),
                            parts.test.inputs.begin() + std::ptrdiff_t(n));
        probe.labels.assign(parts.test.labels.begin(),
                            parts.test.labels.begin() + std::ptrdiff_t(n));
        opts.snapshot_probe = &probe;
        opts.probe_history = &probe_history;
    }

    const auto model = train_classifier(parts, cfg.classifier, arch_spec(cfg), opts);
    const Paths paths(cfg);
    std::vector<std::string> artifacts;
    const std::string model_path =
        noise_inject > 0.0 ? paths.classifier_noise() : paths.classifier();
    save_classifier(model, model_path);
    artifacts.push_back(model_path);
    for (auto& p : split_history_csv(model, cfg)) artifacts.push_back(p);
    if (!probe_history.empty()) {
        save_records(probe_history, paths.history_records());
        artifacts.push_back(paths.history_records());
    }
    write_runlog(cfg, "train", artifacts);
    if (model.history.empty()) throw Error("training produced no cycles");
    std::printf("trained %s arch over %zu cycles, test accuracy %.4f\n",
                cfg.arch.c_str(), model.history.size(),
                model.history.back().test_accuracy);
    return 0;
}

int cmd_autoencode(const RunConfig& cfg, bool on_history) {
    const Paths paths(cfg);
    const auto model = need(paths.classifier(), "train", load_classifier);

    std::vector<ActivationRecord> records;
    if (on_history) {
        records = need(paths.history_records(), "train --history-probe", load_records);
    } else {
        const Split parts = load_split(cfg);
        records = record_activations(model, parts.train, cfg.threads);
    }

    AutoencoderOptions opts;
    opts.mmd_weight = cfg.mmd_weight;
    const auto vae = train_autoencoder(records, cfg.autoencoder, opts);
    save_autoencoder(vae, paths.autoencoder());
    write_runlog(cfg, "autoencode", {paths.autoencoder()});

    const auto latents = encode_all(vae, records, cfg.threads);
    auto prior_rng = make_rng(mix64(cfg.seed, 0x6a55));
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<LatentPoint> prior(4096);
    for (auto& p : prior) p = {g(prior_rng), g(prior_rng)};
    std::printf("autoencoder trained on %zu records; mmd^2 to prior %.5f\n",
                records.size(), mmd_sq(latents, prior));
    return 0;
}

int cmd_estimate(const RunConfig& cfg) {
    const Paths paths(cfg);
    const auto model = need(paths.classifier(), "train", load_classifier);
    const auto vae = need(paths.autoencoder(), "autoencode", load_autoencoder);
    const Split parts = load_split(cfg);

    std::vector<ActivationRecord> records;
    if (cfg.estimator_records != "val")
        records = record_activations(model, parts.train, cfg.threads);
    if (cfg.estimator_records != "train") {
        auto v = record_activations(model, parts.val, cfg.threads);
        records.insert(records.end(), v.begin(), v.end());
    }

    EstimatorOptions opts;
    opts.error_floor = cfg.error_floor;
    const auto est = train_estimator(vae, records, cfg.estimator, opts);
    save_estimator(est, paths.estimator());
    write_runlog(cfg, "estimate", {paths.estimator()});
    std::printf("estimator trained on %zu %s records\n", records.size(),
                cfg.estimator_records.c_str());
    return 0;
}

int cmd_atlas(const RunConfig& cfg) {
    const Paths paths(cfg);
    const auto model = need(paths.classifier(), "train", load_classifier);
    const auto vae = need(paths.autoencoder(), "autoencode", load_autoencoder);
    const Split parts = load_split(cfg);
    std::vector<std::string> artifacts;

    // Test-set atlas scatter + latents CSV.
    const auto test_records = record_activations(model, parts.test, cfg.threads);
    const auto test_latents = encode_all(vae, test_records, cfg.threads);
    {
        csv::Writer w(paths.in_out("latents_test.csv"),
                      {"sample_id", "class", "predicted", "z1", "z2", "e"});
        std::vector<svg::ScatterPoint> pts;
        for (std::size_t i = 0; i < test_records.size(); ++i) {
            const auto& r = test_records[i];
            int pred = 0;
            for (std::size_t u = 1; u < r.y_hat.size(); ++u)
                if (r.y_hat[u] > r.y_hat[std::size_t(pred)]) pred = int(u);
            w.row({std::to_string(r.sample_id), std::to_string(r.y_true),
                   std::to_string(pred), csv::fmt(test_latents[i].z1),
                   csv::fmt(test_latents[i].z2), csv::fmt(r.e)});
            pts.push_back({test_latents[i], r.y_true});
        }
        svg::ScatterStyle style;
        style.bound = cfg.atlas.bound;
        svg::export_scatter(paths.in_out("atlas_test.svg"), pts, style);
        artifacts.push_back(paths.in_out("latents_test.csv"));
        artifacts.push_back(paths.in_out("atlas_test.svg"));
    }

    // Class-conditional densities and expected patterns from the train split.
    const auto train_records = record_activations(model, parts.train, cfg.threads);
    const auto train_latents = encode_all(vae, train_records, cfg.threads);
    std::vector<std::vector<LatentPoint>> per_class(Dataset::kClasses);
    for (std::size_t i = 0; i < train_records.size(); ++i)
        per_class[std::size_t(train_records[i].y_true)].push_back(train_latents[i]);

    std::vector<ExpectedPattern> patterns;
    {
        csv::Writer dens(paths.in_out("densities.csv"),
                         {"class", "ix", "iy", "z1", "z2", "value"});
        csv::Writer expl(paths.in_out("expected_latents.csv"),
                         {"class", "z1", "z2", "empirical_z1", "empirical_z2"});
        for (int k = 0; k < Dataset::kClasses; ++k) {
            const auto& pts = per_class[std::size_t(k)];
            const auto grid = class_density(pts, cfg.atlas, k);
            const std::size_t nodes = grid.cfg.nodes_per_axis();
            for (std::size_t iy = 0; iy < nodes; ++iy)
                for (std::size_t ix = 0; ix < nodes; ++ix)
                    dens.row({std::to_string(k), std::to_string(ix), std::to_string(iy),
                              csv::fmt(grid.cfg.node(ix)), csv::fmt(grid.cfg.node(iy)),
                              csv::fmt(grid.at(ix, iy))});
            ExpectedPattern pat;
            pat.cls = k;
            pat.e_z = expected_latent(grid);
            pat.e_h = expected_activation(vae, pat.e_z);
            double mx = 0, my = 0;
            for (const auto& p : pts) {
                mx += p.z1;
                my += p.z2;
            }
            expl.row({std::to_string(k), csv::fmt(pat.e_z.z1), csv::fmt(pat.e_z.z2),
                      csv::fmt(mx / double(pts.size())), csv::fmt(my / double(pts.size()))});
            patterns.push_back(std::move(pat));
        }
        artifacts.push_back(paths.in_out("densities.csv"));
        artifacts.push_back(paths.in_out("expected_latents.csv"));
    }
    {
        csv::Writer w(paths.in_out("expected_patterns.csv"), {"class", "unit", "value"});
        for (const auto& p : patterns)
            for (std::size_t u = 0; u < p.e_h.size(); ++u)
                w.row({std::to_string(p.cls), std::to_string(u), csv::fmt(p.e_h[u])});
        artifacts.push_back(paths.in_out("expected_patterns.csv"));
    }

    // Unit sorting and brainbow coloring.
    const auto assignment = sort_units(patterns, model.spec);
    {
        csv::Writer w(paths.in_out("assignment.csv"),
                      {"layer", "new_pos", "old_index", "class"});
        std::size_t offset = 0;
        for (std::size_t li = 0; li < assignment.layer_perm.size(); ++li) {
            const auto& perm = assignment.layer_perm[li];
            for (std::size_t pos = 0; pos < perm.size(); ++pos)
                w.row({std::to_string(li), std::to_string(pos), std::to_string(perm[pos]),
                       std::to_string(assignment.unit_class[offset + perm[pos]])});
            offset += perm.size();
        }
        artifacts.push_back(paths.in_out("assignment.csv"));
    }
    {
        const auto colors = brainbow(patterns, svg::default_palette());
        std::vector<std::size_t> widths;
        for (std::size_t li = 0; li + 1 < model.spec.layers.size(); ++li)
            widths.push_back(model.spec.layers[li].out);
        svg::export_brainbow(paths.in_out("brainbow.svg"), colors, widths);
        csv::Writer w(paths.in_out("brainbow.csv"), {"unit", "r", "g", "b"});
        for (std::size_t u = 0; u < colors.size(); ++u)
            w.row({std::to_string(u), csv::fmt(colors[u][0]), csv::fmt(colors[u][1]),
                   csv::fmt(colors[u][2])});
        artifacts.push_back(paths.in_out("brainbow.svg"));
        artifacts.push_back(paths.in_out("brainbow.csv"));
    }

    // Error heatmap over the grid when an estimator exists.
    if (fs::exists(paths.estimator())) {
        const auto est = load_estimator(paths.estimator());
        svg::Heatmap heat;
        heat.cfg = cfg.atlas;
        const std::size_t nodes = heat.cfg.nodes_per_axis();
        heat.values.resize(nodes * nodes);
        csv::Writer w(paths.in_out("error_heatmap.csv"), {"ix", "iy", "z1", "z2", "e_log10"});
        for (std::size_t iy = 0; iy < nodes; ++iy)
            for (std::size_t ix = 0; ix < nodes; ++ix) {
                const LatentPoint z{heat.cfg.node(ix), heat.cfg.node(iy)};
                const double v = estimate_error(est, z);
                heat.values[iy * nodes + ix] = v;
                w.row({std::to_string(ix), std::to_string(iy), csv::fmt(z.z1),
                       csv::fmt(z.z2), csv::fmt(v)});
            }
        std::vector<svg::ScatterPoint> pts;
        for (std::size_t i = 0; i < test_latents.size(); ++i)
            pts.push_back({test_latents[i], test_records[i].y_true});
        svg::ScatterStyle style;
        style.bound = cfg.atlas.bound;
        svg::export_scatter(paths.in_out("atlas_error.svg"), pts, style, &heat);
        artifacts.push_back(paths.in_out("error_heatmap.csv"));
        artifacts.push_back(paths.in_out("atlas_error.svg"));
    }

    write_runlog(cfg, "atlas", artifacts);
    std::printf("atlas artifacts written to %s\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_reorder(const RunConfig& cfg) {
    const Paths paths(cfg);
    const auto model = need(paths.classifier(), "train", load_classifier);
    if (!fs::exists(paths.in_out("assignment.csv")))
        throw Error("missing prerequisite artifact \"atlas\" (" +
                    paths.in_out("assignment.csv") + "); run `sintro atlas` first");

    UnitAssignment assignment;
    const auto rows = csv::read(paths.in_out("assignment.csv"));
    std::size_t total_units = model.spec.hidden_width_total();
    assignment.unit_class.assign(total_units, 0);
    for (std::size_t li = 0; li + 1 < model.spec.layers.size(); ++li)
        assignment.layer_perm.emplace_back(model.spec.layers[li].out);
    std::vector<std::size_t> offsets(assignment.layer_perm.size(), 0);
    {
        std::size_t off = 0;
        for (std::size_t li = 0; li < assignment.layer_perm.size(); ++li) {
            offsets[li] = off;
            off += assignment.layer_perm[li].size();
        }
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 4) throw Error("assignment.csv: malformed row");
        const std::size_t li = std::stoul(row[0]);
        const std::size_t pos = std::stoul(row[1]);
        const std::size_t old_index = std::stoul(row[2]);
        if (li >= assignment.layer_perm.size() ||
            pos >= assignment.layer_perm[li].size())
            throw Error("assignment.csv: index out of range");
        assignment.layer_perm[li][pos] = old_index;
        assignment.unit_class[offsets[li] + old_index] = std::stoi(row[3]);
    }

    const auto sorted = apply_permutation(model, assignment);
    save_classifier(sorted, paths.classifier_sorted());

    // function-preservation report over the test split
    const Split parts = load_split(cfg);
    std::size_t agree = 0;
    double max_dy = 0.0;
    const std::size_t n_dy = std::min<std::size_t>(parts.test.size(), 1000);
    for (std::size_t i = 0; i < parts.test.size(); ++i) {
        const auto [l0, y0] = classify(model, parts.test.inputs[i]);
        const auto [l1, y1] = classify(sorted, parts.test.inputs[i]);
        agree += l0 == l1 ? 1 : 0;
        if (i < n_dy)
            for (std::size_t u = 0; u < y0.size(); ++u)
                max_dy = std::max(max_dy, std::abs(double(y0[u]) - double(y1[u])));
    }
    write_runlog(cfg, "reorder", {paths.classifier_sorted()});
    std::printf("reordered model saved; label agreement %zu/%zu, max |dy| %.3g\n",
                agree, parts.test.size(), max_dy);
    return 0;
}

int cmd_constellation(const RunConfig& cfg) {
    const Paths paths(cfg);
    const auto model = need(paths.classifier(), "train", load_classifier);
    const auto vae = need(paths.autoencoder(), "autoencode", load_autoencoder);
    std::optional<EstimatorModel> est;
    if (fs::exists(paths.estimator())) est = load_estimator(paths.estimator());

    const Split parts = load_split(cfg);
    if (cfg.constellation.sample >= parts.test.size())
        throw Error("constellation sample index out of range");
    const auto& x = parts.test.inputs[cfg.constellation.sample];

    const auto cons = noise_constellation(model, vae, est ? &*est : nullptr, x,
                                          cfg.constellation.sample,
                                          cfg.constellation.sigmas,
                                          cfg.constellation.draws, cfg.seed);

    csv::Writer w(paths.in_out("constellation.csv"),
                  {"sample_id", "sigma", "draw", "z1", "z2", "label", "e_log10",
                   "dx", "dy"});
    std::vector<svg::ScatterPoint> pts;
    for (const auto& c : cons)
        for (std::size_t d = 0; d < c.points.size(); ++d) {
            const auto& p = c.points[d];
            w.row({std::to_string(c.sample_id), csv::fmt(c.sigma), std::to_string(d),
                   csv::fmt(p.z.z1), csv::fmt(p.z.z2), std::to_string(p.label),
                   csv::fmt(p.e_log10), csv::fmt(p.displacement.z1),
                   csv::fmt(p.displacement.z2)});
            pts.push_back({p.z, p.label});
        }
    svg::ScatterStyle style;
    style.bound = cfg.atlas.bound;
    svg::export_scatter(paths.in_out("constellation.svg"), pts, style);
    write_runlog(cfg, "constellation",
                 {paths.in_out("constellation.csv"), paths.in_out("constellation.svg")});
    std::printf("constellations for sample %zu over %zu noise levels\n",
                cfg.constellation.sample, cons.size());
    return 0;
}

int cmd_attack(const RunConfig& cfg) {
    const Paths paths(cfg);
    const auto model = need(paths.classifier(), "train", load_classifier);
    const auto vae = need(paths.autoencoder(), "autoencode", load_autoencoder);
    const Split parts = load_split(cfg);

    FgsmOptions opts;
    opts.eps = cfg.attack.eps;
    opts.max_steps = cfg.attack.max_steps;
    opts.continue_after_success = cfg.attack.continue_after_success;

    auto rng = make_rng(mix64(cfg.seed, 0xa77ac4));
    std::uniform_int_distribution<std::size_t> pick(0, parts.test.size() - 1);

    csv::Writer w(paths.in_out("attacks.csv"),
                  {"sample_id", "target", "step", "z1", "z2", "label", "input_hash",
                   "success", "success_step"});
    std::vector<std::vector<LatentPoint>> lines;
    std::vector<svg::ScatterPoint> pts;
    std::size_t successes = 0, total = 0;
    for (std::size_t s = 0; s < cfg.attack.samples; ++s) {
        const std::size_t id = pick(rng);
        const int truth = parts.test.labels[id];
        for (int target = 0; target < Dataset::kClasses; ++target) {
            if (target == truth) continue;
            const auto traj =
                fgsm_attack(model, vae, parts.test.inputs[id], id, target, opts);
            ++total;
            successes += traj.success ? 1 : 0;
            std::vector<LatentPoint> line;
            for (std::size_t st = 0; st < traj.steps.size(); ++st) {
                const auto& step = traj.steps[st];
                w.row({std::to_string(id), std::to_string(target), std::to_string(st),
                       csv::fmt(step.z.z1), csv::fmt(step.z.z2),
                       std::to_string(step.label), std::to_string(step.input_hash),
                       traj.success ? "1" : "0",
                       traj.success_step ? std::to_string(*traj.success_step) : ""});
                line.push_back(step.z);
            }
            pts.push_back({traj.steps.front().z, truth});
            pts.push_back({traj.steps.back().z, traj.steps.back().label});
            lines.push_back(std::move(line));
        }
    }
    svg::ScatterStyle style;
    style.bound = cfg.atlas.bound;
    svg::export_scatter(paths.in_out("attacks.svg"), pts, style, nullptr, &lines);
    write_runlog(cfg, "attack", {paths.in_out("attacks.csv"), paths.in_out("attacks.svg")});
    std::printf("fgsm: %zu/%zu attacks reached their target\n", successes, total);
    return 0;
}

int cmd_violin(const RunConfig& cfg) {
    const Paths paths(cfg);
    const auto model = need(paths.classifier(), "train", load_classifier);
    const auto vae = need(paths.autoencoder(), "autoencode", load_autoencoder);
    const auto est = need(paths.estimator(), "estimate", load_estimator);
    const Split parts = load_split(cfg);

    const auto report = violin_report(model, vae, est, parts.test, cfg.threads);
    {
        csv::Writer w(paths.in_out("violin.csv"), {"class", "correct", "e_log10"});
        for (const auto& c : report.classes) {
            for (double e : c.correct_e_log10)
                w.row({std::to_string(c.cls), "1", csv::fmt(e)});
            for (double e : c.miscl_e_log10)
                w.row({std::to_string(c.cls), "0", csv::fmt(e)});
        }
    }
    {
        csv::Writer w(paths.in_out("violin_summary.csv"),
                      {"class", "n_correct", "n_misclassified", "median_correct",
                       "median_misclassified", "sensitivity"});
        for (const auto& c : report.classes)
            w.row({std::to_string(c.cls), std::to_string(c.correct_e_log10.size()),
                   std::to_string(c.miscl_e_log10.size()),
                   csv::fmt(median(c.correct_e_log10)),
                   csv::fmt(median(c.miscl_e_log10)), csv::fmt(c.sensitivity)});
    }
    write_runlog(cfg, "violin",
                 {paths.in_out("violin.csv"), paths.in_out("violin_summary.csv")});
    std::printf("violin report over %zu test samples, accuracy %.4f\n", report.total,
                report.overall_accuracy());
    return 0;
}

int cmd_export(const std::string& artifact, const std::string& out_path,
               const std::string& what) {
    if (!fs::exists(artifact)) throw Error("no such artifact: " + artifact);
    const std::string ext = fs::path(artifact).extension().string();
    if (ext == ".sint") {
        const auto c = load_container(artifact);
        if (what == "manifest") {
            std::ofstream out(out_path);
            out << c.manifest.dump(2) << "\n";
        } else {
            // arrays as CSV at full storage precision
            csv::Writer w(out_path, {"array", "index", "value"});
            for (const auto& a : c.arrays)
                for (std::size_t i = 0; i < a.data.size(); ++i)
                    w.row({a.name, std::to_string(i), csv::fmt(a.data[i])});
        }
        std::printf("exported %s (%s) -> %s\n", artifact.c_str(), c.kind.c_str(),
                    out_path.c_str());
        return 0;
    }
    if (ext == ".csv") {
        // re-render a latent CSV (columns z1/z2 + class-ish column) as a scatter
        const auto rows = csv::read(artifact);
        if (rows.size() < 2) throw Error("empty csv: " + artifact);
        const auto& header = rows[0];
        auto col = [&](const std::string& name) -> std::ptrdiff_t {
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == name) return std::ptrdiff_t(i);
            return -1;
        };
        const auto z1 = col("z1"), z2 = col("z2");
        if (z1 < 0 || z2 < 0) throw Error("csv has no z1/z2 columns: " + artifact);
        std::ptrdiff_t cls = col("class");
        if (cls < 0) cls = col("label");
        std::vector<svg::ScatterPoint> pts;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            svg::ScatterPoint p;
            p.z = {std::stod(rows[r][std::size_t(z1)]), std::stod(rows[r][std::size_t(z2)])};
            p.cls = cls >= 0 ? std::stoi(rows[r][std::size_t(cls)]) : 0;
            pts.push_back(p);
        }
        svg::export_scatter(out_path, pts);
        std::printf("exported %zu points -> %s\n", pts.size(), out_path.c_str());
        return 0;
    }
    throw Error("cannot export artifact type: " + artifact);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-introspection pipeline for feedforward classifiers"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string arch_override, out_override;
    std::int64_t seed_override = -1;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "run configuration (JSON)")
            ->required();
        sub->add_option("--arch", arch_override, "override architecture (desk|paper)");
        sub->add_option("--out", out_override, "override output directory");
        sub->add_option("--seed", seed_override, "override global seed");
    };

    double noise_inject = 0.0;
    std::size_t history_probe = 0;
    auto* train = app.add_subcommand("train", "train the classifier");
    add_common(train);
    train->add_option("--noise-inject", noise_inject,
                      "AWGN domain randomization up to this sigma");
    train->add_option("--history-probe", history_probe,
                      "record activations of this many test samples every cycle");

    bool on_history = false;
    auto* autoencode = app.add_subcommand("autoencode",
                                          "train the activation autoencoder");
    add_common(autoencode);
    autoencode->add_flag("--on-history", on_history,
                         "train on recorded training-history activations");

    auto* estimate = app.add_subcommand("estimate", "train the error estimator");
    add_common(estimate);
    auto* atlas = app.add_subcommand("atlas", "densities, expected patterns, sorting");
    add_common(atlas);
    auto* reorder = app.add_subcommand("reorder", "apply the unit permutation");
    add_common(reorder);
    auto* constellation =
        app.add_subcommand("constellation", "noise constellations for one sample");
    add_common(constellation);
    auto* attack = app.add_subcommand("attack", "FGSM attack trajectories");
    add_common(attack);
    auto* violin = app.add_subcommand("violin", "error-estimate distributions");
    add_common(violin);

    std::string artifact, export_out, what = "arrays";
    auto* exp = app.add_subcommand("export", "re-export a stored artifact");
    exp->add_option("--artifact", artifact, "artifact path (.sint or .csv)")->required();
    exp->add_option("-o,--out", export_out, "output file")->required();
    exp->add_option("--what", what, "for containers: arrays|manifest");

    CLI11_PARSE(app, argc, argv);

    try {
        if (exp->parsed()) return cmd_export(artifact, export_out, what);

        RunConfig cfg = load_config(config_path);
        if (!arch_override.empty()) cfg.arch = arch_override;
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_override >= 0) {
            cfg.seed = std::uint64_t(seed_override);
            for (nn::TrainConfig* t : {&cfg.classifier, &cfg.autoencoder, &cfg.estimator})
                t->seed = cfg.seed;
        }
        fs::create_directories(cfg.out_dir);

        if (train->parsed()) return cmd_train(cfg, noise_inject, history_probe);
        if (autoencode->parsed()) return cmd_autoencode(cfg, on_history);
        if (estimate->parsed()) return cmd_estimate(cfg);
        if (atlas->parsed()) return cmd_atlas(cfg);
        if (reorder->parsed()) return cmd_reorder(cfg);
        if (constellation->parsed()) return cmd_constellation(cfg);
        if (attack->parsed()) return cmd_attack(cfg);
        if (violin->parsed()) return cmd_violin(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
