#include "sintro/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace sintro {

namespace {

constexpr char kMagic[5] = {'S', 'I', 'N', 'T', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms unsupported");

template <typename T>
void to_le(T& v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto* p = reinterpret_cast<unsigned char*>(&v);
        std::reverse(p, p + sizeof(T));
    }
}

struct ChecksumWriter {
    std::ostream& out;
    std::uint64_t sum = kFnvOffset;

    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            sum ^= p[i];
            sum *= kFnvPrime;
        }
        out.write(reinterpret_cast<const char*>(p), std::streamsize(n));
        if (!out) throw Error("container write failed");
    }
    template <typename T>
    void le(T v) {
        to_le(v);
        bytes(&v, sizeof(T));
    }
};

struct ChecksumReader {
    std::istream& in;
    const std::string& path;
    std::uint64_t sum = kFnvOffset;

    void bytes(void* data, std::size_t n) {
        in.read(static_cast<char*>(data), std::streamsize(n));
        if (!in) throw Error("container truncated: " + path);
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            sum ^= p[i];
            sum *= kFnvPrime;
        }
    }
    template <typename T>
    T le() {
        T v;
        bytes(&v, sizeof(T));
        to_le(v);
        return v;
    }
};

} // namespace

std::size_t ArrayF32::element_count() const {
    std::size_t n = 1;
    for (std::uint64_t d : shape) n *= std::size_t(d);
    return n;
}

const ArrayF32& ModelContainer::array(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return a;
    throw Error("container: missing array \"" + name + "\"");
}

void save_container(const ModelContainer& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write container: " + path);
    out.write(kMagic, sizeof(kMagic));
    out.put(char(kVersion));
    if (!out) throw Error("container write failed");

    nlohmann::json manifest = c.manifest;
    manifest["kind"] = c.kind;
    const std::string mstr = manifest.dump();

    ChecksumWriter w{out};
    w.le<std::uint32_t>(std::uint32_t(mstr.size()));
    w.bytes(mstr.data(), mstr.size());
    w.le<std::uint32_t>(std::uint32_t(c.arrays.size()));
    for (const auto& a : c.arrays) {
        if (a.data.size() != a.element_count())
            throw Error("container: array \"" + a.name + "\" shape/data mismatch");
        w.le<std::uint32_t>(std::uint32_t(a.name.size()));
        w.bytes(a.name.data(), a.name.size());
        w.le<std::uint32_t>(std::uint32_t(a.shape.size()));
        for (std::uint64_t d : a.shape) w.le<std::uint64_t>(d);
        if constexpr (std::endian::native == std::endian::little) {
            w.bytes(a.data.data(), a.data.size() * sizeof(float));
        } else {
            for (float f : a.data) w.le<float>(f);
        }
    }
    std::uint64_t sum = w.sum;
    to_le(sum);
    out.write(reinterpret_cast<const char*>(&sum), sizeof(sum));
    if (!out) throw Error("container write failed");
}

ModelContainer load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open container: " + path);
    char magic[5];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("not a SINT1 container: " + path);
    const int version = in.get();
    if (version != kVersion)
        throw Error("unsupported container version " + std::to_string(version) +
                    " in " + path);

    ChecksumReader r{in, path};
    const auto mlen = r.le<std::uint32_t>();
    std::string mstr(mlen, '\0');
    r.bytes(mstr.data(), mlen);

    ModelContainer c;
    try {
        c.manifest = nlohmann::json::parse(mstr);
    } catch (const nlohmann::json::exception& e) {
        throw Error("container manifest parse failed: " + std::string(e.what()));
    }
    c.kind = c.manifest.value("kind", "");

    const auto count = r.le<std::uint32_t>();
    c.arrays.resize(count);
    for (auto& a : c.arrays) {
        const auto nlen = r.le<std::uint32_t>();
        a.name.resize(nlen);
        r.bytes(a.name.data(), nlen);
        const auto ndim = r.le<std::uint32_t>();
        a.shape.resize(ndim);
        std::size_t total = 1;
        for (auto& d : a.shape) {
            d = r.le<std::uint64_t>();
            total *= std::size_t(d);
        }
        a.data.resize(total);
        if constexpr (std::endian::native == std::endian::little) {
            r.bytes(a.data.data(), total * sizeof(float));
        } else {
            for (auto& f : a.data) f = r.le<float>();
        }
    }

    std::uint64_t stored;
    in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (!in) throw Error("container truncated: " + path);
    to_le(stored);
    if (stored != r.sum)
        throw Error("container checksum mismatch in " + path);
    return c;
}

ModelContainer load_container(const std::string& path, const std::string& expected_kind) {
    ModelContainer c = load_container(path);
    if (c.kind != expected_kind)
        throw Error("container kind mismatch in " + path + ": expected \"" +
                    expected_kind + "\", found \"" + c.kind + "\"");
    return c;
}

namespace {

nlohmann::json spec_to_json(const nn::NetworkSpec& spec) {
    nlohmann::json j;
    j["dropout_keep"] = spec.dropout_keep;
    auto& layers = j["layers"] = nlohmann::json::array();
    for (const auto& l : spec.layers) {
        const char* act = l.act == nn::Activation::Elu ? "elu"
                          : l.act == nn::Activation::Sigmoid ? "sigmoid"
                                                             : "linear";
        layers.push_back({{"in", l.in}, {"out", l.out}, {"act", act}});
    }
    return j;
}

nn::NetworkSpec spec_from_json(const nlohmann::json& j) {
    nn::NetworkSpec spec;
    spec.dropout_keep = j.at("dropout_keep").get<double>();
    for (const auto& l : j.at("layers")) {
        nn::LayerSpec ls;
        ls.in = l.at("in").get<std::size_t>();
        ls.out = l.at("out").get<std::size_t>();
        const std::string act = l.at("act").get<std::string>();
        if (act == "elu")
            ls.act = nn::Activation::Elu;
        else if (act == "sigmoid")
            ls.act = nn::Activation::Sigmoid;
        else if (act == "linear")
            ls.act = nn::Activation::Linear;
        else
            throw Error("container: unknown activation \"" + act + "\"");
        spec.layers.push_back(ls);
    }
    spec.validate();
    return spec;
}

void push_params(std::vector<ArrayF32>& arrays, const std::string& prefix,
                 const nn::NetworkSpec& spec, const nn::Params& params) {
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        const auto& l = spec.layers[li];
        arrays.push_back({prefix + "L" + std::to_string(li) + ".W",
                          {l.out, l.in},
                          params.layers[li].W});
        arrays.push_back({prefix + "L" + std::to_string(li) + ".b",
                          {l.out},
                          params.layers[li].b});
    }
}

nn::Params pull_params(const ModelContainer& c, const std::string& prefix,
                       const nn::NetworkSpec& spec) {
    nn::Params p = nn::zeros_like<float>(spec);
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const auto& W = c.array(prefix + "L" + std::to_string(li) + ".W");
        const auto& b = c.array(prefix + "L" + std::to_string(li) + ".b");
        const auto& l = spec.layers[li];
        if (W.shape != std::vector<std::uint64_t>{l.out, l.in} ||
            b.shape != std::vector<std::uint64_t>{l.out})
            throw Error("container: shape mismatch at layer " + std::to_string(li));
        p.layers[li].W = W.data;
        p.layers[li].b = b.data;
    }
    return p;
}

} // namespace

void save_classifier(const ClassifierModel& model, const std::string& path) {
    ModelContainer c;
    c.kind = "classifier";
    c.manifest["spec"] = spec_to_json(model.spec);
    auto& hist = c.manifest["history"] = nlohmann::json::array();
    for (const auto& s : model.history)
        hist.push_back({{"cycle", s.cycle},
                        {"train_error", s.train_error},
                        {"val_error", s.val_error},
                        {"test_accuracy", s.test_accuracy}});
    push_params(c.arrays, "", model.spec, model.params);
    save_container(c, path);
}

ClassifierModel load_classifier(const std::string& path) {
    ModelContainer c = load_container(path, "classifier");
    ClassifierModel model;
    model.spec = spec_from_json(c.manifest.at("spec"));
    model.params = pull_params(c, "", model.spec);
    for (const auto& s : c.manifest.value("history", nlohmann::json::array())) {
        CycleStats st;
        st.cycle = s.at("cycle").get<std::size_t>();
        st.train_error = s.at("train_error").get<double>();
        st.val_error = s.at("val_error").get<double>();
        st.test_accuracy = s.at("test_accuracy").get<double>();
        model.history.push_back(st);
    }
    return model;
}

void save_autoencoder(const AutoencoderModel& model, const std::string& path) {
    ModelContainer c;
    c.kind = "autoencoder";
    c.manifest["enc_spec"] = spec_to_json(model.enc_spec);
    c.manifest["dec_spec"] = spec_to_json(model.dec_spec);
    c.manifest["mmd_weight"] = model.mmd_weight;
    c.manifest["final_train_loss"] = model.final_train_loss;
    push_params(c.arrays, "enc.", model.enc_spec, model.enc);
    push_params(c.arrays, "dec.", model.dec_spec, model.dec);
    c.arrays.push_back({"mean", {model.mean.size()}, model.mean});
    c.arrays.push_back({"stdev", {model.stdev.size()}, model.stdev});
    save_container(c, path);
}

AutoencoderModel load_autoencoder(const std::string& path) {
    ModelContainer c = load_container(path, "autoencoder");
    AutoencoderModel model;
    model.enc_spec = spec_from_json(c.manifest.at("enc_spec"));
    model.dec_spec = spec_from_json(c.manifest.at("dec_spec"));
    model.mmd_weight = c.manifest.at("mmd_weight").get<double>();
    model.final_train_loss = c.manifest.value("final_train_loss", 0.0);
    model.enc = pull_params(c, "enc.", model.enc_spec);
    model.dec = pull_params(c, "dec.", model.dec_spec);
    model.mean = c.array("mean").data;
    model.stdev = c.array("stdev").data;
    if (model.mean.size() != model.enc_spec.input_width() ||
        model.stdev.size() != model.enc_spec.input_width())
        throw Error("container: standardization width mismatch");
    return model;
}

void save_estimator(const EstimatorModel& model, const std::string& path) {
    ModelContainer c;
    c.kind = "estimator";
    c.manifest["spec"] = spec_to_json(model.spec);
    c.manifest["error_floor"] = model.error_floor;
    push_params(c.arrays, "", model.spec, model.params);
    save_container(c, path);
}

EstimatorModel load_estimator(const std::string& path) {
    ModelContainer c = load_container(path, "estimator");
    EstimatorModel model;
    model.spec = spec_from_json(c.manifest.at("spec"));
    model.error_floor = c.manifest.at("error_floor").get<double>();
    model.params = pull_params(c, "", model.spec);
    return model;
}

void save_records(const std::vector<ActivationRecord>& records, const std::string& path) {
    if (records.empty()) throw Error("save_records: nothing to save");
    const std::size_t n = records.size();
    const std::size_t dim = records.front().h.size();
    const std::size_t out_dim = records.front().y_hat.size();

    ArrayF32 h{"h", {n, dim}, {}};
    h.data.reserve(n * dim);
    ArrayF32 y_hat{"y_hat", {n, out_dim}, {}};
    y_hat.data.reserve(n * out_dim);
    ArrayF32 y_true{"y_true", {n}, {}};
    ArrayF32 e{"e", {n}, {}};
    ArrayF32 sample_id{"sample_id", {n}, {}};
    ArrayF32 cycle{"cycle", {n}, {}};
    for (const auto& r : records) {
        if (r.h.size() != dim || r.y_hat.size() != out_dim)
            throw Error("save_records: inconsistent record widths");
        h.data.insert(h.data.end(), r.h.begin(), r.h.end());
        y_hat.data.insert(y_hat.data.end(), r.y_hat.begin(), r.y_hat.end());
        y_true.data.push_back(float(r.y_true));
        e.data.push_back(float(r.e));
        sample_id.data.push_back(float(r.sample_id));
        cycle.data.push_back(float(r.cycle));
    }

    ModelContainer c;
    c.kind = "records";
    c.manifest["count"] = n;
    c.manifest["width"] = dim;
    c.arrays = {std::move(h), std::move(y_hat), std::move(y_true),
                std::move(e), std::move(sample_id), std::move(cycle)};
    save_container(c, path);
}

std::vector<ActivationRecord> load_records(const std::string& path) {
    ModelContainer c = load_container(path, "records");
    const auto& h = c.array("h");
    const auto& y_hat = c.array("y_hat");
    const auto& y_true = c.array("y_true");
    const auto& e = c.array("e");
    const auto& sample_id = c.array("sample_id");
    const auto& cycle = c.array("cycle");
    if (h.shape.size() != 2 || y_hat.shape.size() != 2)
        throw Error("records container: bad array ranks");
    const std::size_t n = std::size_t(h.shape[0]);
    const std::size_t dim = std::size_t(h.shape[1]);
    const std::size_t out_dim = std::size_t(y_hat.shape[1]);
    if (y_hat.shape[0] != n || y_true.shape != std::vector<std::uint64_t>{n} ||
        e.shape != std::vector<std::uint64_t>{n} ||
        sample_id.shape != std::vector<std::uint64_t>{n} ||
        cycle.shape != std::vector<std::uint64_t>{n})
        throw Error("records container: array count mismatch");

    std::vector<ActivationRecord> records(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = records[i];
        r.h.assign(h.data.begin() + std::ptrdiff_t(i * dim),
                   h.data.begin() + std::ptrdiff_t((i + 1) * dim));
        r.y_hat.assign(y_hat.data.begin() + std::ptrdiff_t(i * out_dim),
                       y_hat.data.begin() + std::ptrdiff_t((i + 1) * out_dim));
        r.y_true = int(y_true.data[i]);
        r.e = double(e.data[i]);
        r.sample_id = std::size_t(sample_id.data[i]);
        r.cycle = int(cycle.data[i]);
    }
    return records;
}

} // namespace sintro
