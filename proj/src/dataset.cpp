#include "sintro/dataset.hpp"

#include "sintro/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace sintro {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, std::uint64_t& offset, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw Error("idx parse error: " + path + " truncated at offset " +
                    std::to_string(offset));
    offset += 4;
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

std::vector<float> Dataset::one_hot(std::size_t i) const {
    std::vector<float> y(kClasses, 0.0f);
    y[static_cast<std::size_t>(labels[i])] = 1.0f;
    return y;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw Error("cannot open images file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw Error("cannot open labels file: " + labels_path);

    std::uint64_t img_off = 0, lab_off = 0;
    const std::uint32_t img_magic = read_u32_be(img, img_off, images_path);
    if (img_magic != kImagesMagic)
        throw Error("idx parse error: " + images_path + " bad magic at offset 0 (got " +
                    std::to_string(img_magic) + ")");
    const std::uint32_t n = read_u32_be(img, img_off, images_path);
    const std::uint32_t rows = read_u32_be(img, img_off, images_path);
    const std::uint32_t cols = read_u32_be(img, img_off, images_path);
    if (rows != 28 || cols != 28)
        throw Error("idx parse error: " + images_path + " expected 28x28 images, got " +
                    std::to_string(rows) + "x" + std::to_string(cols));

    const std::uint32_t lab_magic = read_u32_be(lab, lab_off, labels_path);
    if (lab_magic != kLabelsMagic)
        throw Error("idx parse error: " + labels_path + " bad magic at offset 0 (got " +
                    std::to_string(lab_magic) + ")");
    const std::uint32_t n_lab = read_u32_be(lab, lab_off, labels_path);
    if (n_lab != n)
        throw Error("idx parse error: image count " + std::to_string(n) +
                    " != label count " + std::to_string(n_lab));

    Dataset data;
    data.inputs.resize(n);
    data.labels.resize(n);
    std::vector<unsigned char> buf(Dataset::kInputDim);
    for (std::uint32_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
        if (!img)
            throw Error("idx parse error: " + images_path + " truncated at offset " +
                        std::to_string(img_off));
        img_off += buf.size();
        auto& x = data.inputs[i];
        x.resize(Dataset::kInputDim);
        for (std::size_t p = 0; p < buf.size(); ++p) x[p] = float(buf[p]) / 255.0f;

        char lbl = 0;
        lab.read(&lbl, 1);
        if (!lab)
            throw Error("idx parse error: " + labels_path + " truncated at offset " +
                        std::to_string(lab_off));
        lab_off += 1;
        const int y = int(static_cast<unsigned char>(lbl));
        if (y >= Dataset::kClasses)
            throw Error("idx parse error: label " + std::to_string(y) +
                        " out of range at offset " + std::to_string(lab_off - 1));
        data.labels[i] = y;
    }
    return data;
}

void save_idx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path) {
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw Error("cannot write images file: " + images_path);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw Error("cannot write labels file: " + labels_path);

    write_u32_be(img, kImagesMagic);
    write_u32_be(img, std::uint32_t(data.size()));
    write_u32_be(img, 28);
    write_u32_be(img, 28);
    write_u32_be(lab, kLabelsMagic);
    write_u32_be(lab, std::uint32_t(data.size()));

    std::vector<unsigned char> buf(Dataset::kInputDim);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& x = data.inputs[i];
        if (x.size() != Dataset::kInputDim) throw Error("save_idx: bad input length");
        for (std::size_t p = 0; p < x.size(); ++p)
            buf[p] = static_cast<unsigned char>(std::lround(x[p] * 255.0f));
        img.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
        lab.put(char(static_cast<unsigned char>(data.labels[i])));
    }
    if (!img || !lab) throw Error("save_idx: write failed");
}

namespace {

Dataset take(const Dataset& src, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.inputs.reserve(idx.size());
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) {
        out.inputs.push_back(src.inputs[i]);
        out.labels.push_back(src.labels[i]);
    }
    return out;
}

// Largest-remainder apportionment of `want` slots over per-class pools.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& pool_sizes,
                                   std::size_t total_pool, std::size_t want) {
    const std::size_t k = pool_sizes.size();
    std::vector<std::size_t> out(k, 0);
    std::vector<std::pair<double, std::size_t>> rema(k);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double exact = double(want) * double(pool_sizes[c]) / double(total_pool);
        out[c] = std::size_t(exact);
        rema[c] = {exact - double(out[c]), c};
        assigned += out[c];
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t j = 0; assigned < want; ++j, ++assigned) out[rema[j % k].second] += 1;
    return out;
}

} // namespace

Split split(const Dataset& data, const SplitSpec& spec) {
    const std::size_t want = spec.train_count + spec.val_count + spec.test_count;
    if (want > data.size())
        throw Error("split: requested " + std::to_string(want) + " samples from " +
                    std::to_string(data.size()));

    std::vector<std::vector<std::size_t>> per_class(Dataset::kClasses);
    for (std::size_t i = 0; i < data.size(); ++i)
        per_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

    std::vector<std::size_t> pool_sizes(Dataset::kClasses);
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        auto rng = make_rng(mix64(spec.seed, 0x5157ULL + c));
        std::shuffle(per_class[c].begin(), per_class[c].end(), rng);
        pool_sizes[c] = per_class[c].size();
    }

    const auto n_train = apportion(pool_sizes, data.size(), spec.train_count);
    // remaining pool after the train take
    std::vector<std::size_t> rest(Dataset::kClasses);
    std::size_t rest_total = 0;
    for (std::size_t c = 0; c < rest.size(); ++c) {
        rest[c] = pool_sizes[c] - n_train[c];
        rest_total += rest[c];
    }
    const auto n_val = apportion(rest, rest_total, spec.val_count);
    for (std::size_t c = 0; c < rest.size(); ++c) {
        rest[c] -= n_val[c];
        rest_total -= n_val[c];
    }
    const auto n_test = apportion(rest, rest_total, spec.test_count);

    Split out;
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        std::size_t pos = 0;
        for (std::size_t j = 0; j < n_train[c]; ++j) out.train_idx.push_back(per_class[c][pos++]);
        for (std::size_t j = 0; j < n_val[c]; ++j) out.val_idx.push_back(per_class[c][pos++]);
        for (std::size_t j = 0; j < n_test[c]; ++j) out.test_idx.push_back(per_class[c][pos++]);
    }
    // Mix class blocks so batches are not label-ordered.
    for (auto* idx : {&out.train_idx, &out.val_idx, &out.test_idx}) {
        auto rng = make_rng(mix64(spec.seed, 0xb10cULL + idx->size()));
        std::shuffle(idx->begin(), idx->end(), rng);
    }
    out.train = take(data, out.train_idx);
    out.val = take(data, out.val_idx);
    out.test = take(data, out.test_idx);
    return out;
}

std::vector<float> add_awgn(const std::vector<float>& x, double sigma,
                            std::mt19937_64& rng) {
    if (sigma < 0.0) throw Error("add_awgn: negative sigma");
    if (sigma == 0.0) return x;
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = float(double(x[i]) + noise(rng));
    return out;
}

double hausdorff_distance(const std::vector<std::vector<double>>& A,
                          const std::vector<std::vector<double>>& B) {
    if (A.empty() || B.empty()) throw Error("hausdorff_distance: empty point set");
    auto directed = [](const std::vector<std::vector<double>>& P,
                       const std::vector<std::vector<double>>& Q) {
        double sup = 0.0;
        for (const auto& p : P) {
            double inf = std::numeric_limits<double>::infinity();
            for (const auto& q : Q) {
                if (p.size() != q.size())
                    throw Error("hausdorff_distance: dimension mismatch");
                double d2 = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k) {
                    const double d = p[k] - q[k];
                    d2 += d * d;
                }
                inf = std::min(inf, d2);
            }
            sup = std::max(sup, inf);
        }
        return sup;
    };
    return std::sqrt(std::max(directed(A, B), directed(B, A)));
}

} // namespace sintro
