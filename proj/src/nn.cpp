#include "sintro/nn.hpp"

#include "sintro/kernels.hpp"
#include "sintro/rng.hpp"

#include <cmath>

namespace sintro::nn {

void NetworkSpec::validate() const {
    if (layers.empty()) throw Error("NetworkSpec: needs at least one layer");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].in == 0 || layers[i].out == 0)
            throw Error("NetworkSpec: zero width at layer " + std::to_string(i));
        if (i > 0 && layers[i].in != layers[i - 1].out)
            throw Error("NetworkSpec: widths do not chain at layer " + std::to_string(i));
    }
    if (!(dropout_keep > 0.0) || dropout_keep > 1.0)
        throw Error("NetworkSpec: dropout_keep must be in (0,1]");
}

std::size_t NetworkSpec::hidden_width_total() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) n += layers[i].out;
    return n;
}

NetworkSpec make_mlp_spec(std::size_t input_width, std::size_t hidden_layers,
                          std::size_t hidden_width, std::size_t output_width,
                          Activation output_act, double dropout_keep) {
    NetworkSpec spec;
    spec.dropout_keep = dropout_keep;
    std::size_t in = input_width;
    for (std::size_t i = 0; i < hidden_layers; ++i) {
        spec.layers.push_back({in, hidden_width, Activation::Elu});
        in = hidden_width;
    }
    spec.layers.push_back({in, output_width, output_act});
    spec.validate();
    return spec;
}

void TrainConfig::validate() const {
    if (cycle_length < 1) throw Error("TrainConfig: cycle_length must be >= 1");
    if (num_cycles < 1) throw Error("TrainConfig: num_cycles must be >= 1");
    if (lr_min > lr_max) throw Error("TrainConfig: lr_min > lr_max");
    if (lr_min < 0.0) throw Error("TrainConfig: negative lr_min");
    if (batch_size < 1) throw Error("TrainConfig: batch_size must be >= 1");
    if (patience < 1) throw Error("TrainConfig: patience must be >= 1");
    if (!(dropout_keep > 0.0) || dropout_keep > 1.0)
        throw Error("TrainConfig: dropout_keep must be in (0,1]");
}

template <typename T>
bool ParamsT<T>::all_finite() const {
    for (const auto& l : layers) {
        for (T w : l.W)
            if (!std::isfinite(double(w))) return false;
        for (T b : l.b)
            if (!std::isfinite(double(b))) return false;
    }
    return true;
}

template <typename T>
ParamsT<T> zeros_like(const NetworkSpec& spec) {
    spec.validate();
    ParamsT<T> p;
    p.layers.reserve(spec.layers.size());
    for (const auto& l : spec.layers) {
        LayerParams<T> lp;
        lp.W.assign(l.out * l.in, T(0));
        lp.b.assign(l.out, T(0));
        p.layers.push_back(std::move(lp));
    }
    return p;
}

template <typename T>
ParamsT<T> init_params(const NetworkSpec& spec, std::uint64_t seed) {
    ParamsT<T> p = zeros_like<T>(spec);
    auto rng = make_rng(seed);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const double limit = std::sqrt(6.0 / double(spec.layers[i].in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& w : p.layers[i].W) w = T(dist(rng));
    }
    return p;
}

template <typename T>
AdamState<T> make_adam_state(const NetworkSpec& spec) {
    AdamState<T> s;
    s.m = zeros_like<T>(spec);
    s.v = zeros_like<T>(spec);
    s.t = 0;
    return s;
}

namespace {

template <typename T>
void apply_activation(Activation act, std::vector<T>& v) {
    switch (act) {
        case Activation::Elu:
            for (auto& x : v) x = elu(x);
            break;
        case Activation::Sigmoid:
            for (auto& x : v) x = T(1) / (T(1) + std::exp(-x));
            break;
        case Activation::Linear:
            break;
    }
}

// Derivative from the post-activation value a:
//   ELU:     1 for a >= 0, a + 1 otherwise (alpha = 1)
//   Sigmoid: a (1 - a)
template <typename T>
T activation_grad(Activation act, T a) {
    switch (act) {
        case Activation::Elu: return a >= T(0) ? T(1) : a + T(1);
        case Activation::Sigmoid: return a * (T(1) - a);
        case Activation::Linear: return T(1);
    }
    return T(1);
}

} // namespace

template <typename T>
ForwardCache<T> forward_cache(const NetworkSpec& spec, const ParamsT<T>& params,
                              const std::vector<T>& x, Mode mode,
                              std::mt19937_64* rng) {
    if (x.size() != spec.input_width())
        throw Error("forward: input width " + std::to_string(x.size()) +
                    " does not match spec width " + std::to_string(spec.input_width()));
    if (params.layers.size() != spec.layers.size())
        throw Error("forward: params/spec layer count mismatch");

    const bool drop = mode == Mode::Train && spec.dropout_keep < 1.0;
    if (drop && !rng)
        throw Error("forward: Train mode with dropout requires an rng");

    const auto& K = kernels::ops<T>();
    ForwardCache<T> cache;
    cache.mode = mode;
    cache.input = x;
    cache.act.resize(spec.layers.size());
    cache.fed.resize(spec.layers.size());
    if (drop) cache.mask.resize(spec.layers.size());

    const std::vector<T>* in = &cache.input;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const T keep = T(spec.dropout_keep);

    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const auto& l = spec.layers[li];
        const auto& lp = params.layers[li];
        if (lp.W.size() != l.out * l.in || lp.b.size() != l.out)
            throw Error("forward: params shape mismatch at layer " + std::to_string(li));
        auto& a = cache.act[li];
        a.resize(l.out);
        K.matvec(lp.W.data(), in->data(), lp.b.data(), a.data(), l.out, l.in);
        apply_activation(l.act, a);

        const bool hidden = li + 1 < spec.layers.size();
        if (drop && hidden) {
            auto& m = cache.mask[li];
            m.resize(l.out);
            auto& f = cache.fed[li];
            f.resize(l.out);
            const T inv = T(1) / keep;
            for (std::size_t u = 0; u < l.out; ++u) {
                m[u] = unif(*rng) < spec.dropout_keep ? inv : T(0);
                f[u] = a[u] * m[u];
            }
            in = &f;
        } else {
            cache.fed[li] = a;
            in = &cache.fed[li];
        }
    }
    return cache;
}

template <typename T>
ForwardResult<T> forward(const NetworkSpec& spec, const ParamsT<T>& params,
                         const std::vector<T>& x, Mode mode, std::mt19937_64* rng) {
    ForwardCache<T> cache = forward_cache(spec, params, x, mode, rng);
    ForwardResult<T> r;
    r.output = cache.act.back();
    r.hidden.assign(cache.act.begin(), cache.act.end() - 1);
    return r;
}

template <typename T>
std::vector<T> backward_from(const NetworkSpec& spec, const ParamsT<T>& params,
                             const ForwardCache<T>& cache,
                             const std::vector<T>& dLdy, ParamsT<T>& grads) {
    const std::size_t L = spec.layers.size();
    if (dLdy.size() != spec.output_width())
        throw Error("backward: upstream gradient width mismatch");
    if (grads.layers.size() != L)
        throw Error("backward: grads/spec layer count mismatch");
    for (std::size_t li = 0; li < L; ++li)
        for (T a : cache.act[li])
            if (!std::isfinite(double(a)))
                throw NumericError("backward: non-finite activation at layer " +
                                   std::to_string(li));

    const auto& K = kernels::ops<T>();
    const bool drop = cache.mode == Mode::Train && !cache.mask.empty();

    // delta = dL/d(pre-activation) for the current layer
    std::vector<T> delta(spec.output_width());
    for (std::size_t u = 0; u < delta.size(); ++u)
        delta[u] = dLdy[u] * activation_grad(spec.layers.back().act, cache.act.back()[u]);

    std::vector<T> dprev;
    for (std::size_t li = L; li-- > 0;) {
        const auto& l = spec.layers[li];
        const std::vector<T>& in = li == 0 ? cache.input : cache.fed[li - 1];
        K.ger_acc(grads.layers[li].W.data(), delta.data(), in.data(), T(1), l.out, l.in);
        K.axpy(grads.layers[li].b.data(), delta.data(), T(1), l.out);

        dprev.resize(l.in);
        K.matvec_t(params.layers[li].W.data(), delta.data(), dprev.data(), l.out, l.in);
        if (li == 0) return dprev;

        // through dropout, then through the previous layer's activation
        const auto& prev = spec.layers[li - 1];
        for (std::size_t u = 0; u < l.in; ++u) {
            T g = dprev[u];
            if (drop && !cache.mask[li - 1].empty()) g *= cache.mask[li - 1][u];
            dprev[u] = g * activation_grad(prev.act, cache.act[li - 1][u]);
        }
        delta = dprev;
    }
    return dprev;
}

template <typename T>
ParamsT<T> backward(const NetworkSpec& spec, const ParamsT<T>& params,
                    const std::vector<T>& x, const std::vector<T>& target) {
    if (target.size() != spec.output_width())
        throw Error("backward: target width mismatch");
    ForwardCache<T> cache = forward_cache(spec, params, x, Mode::Eval, nullptr);
    std::vector<T> dLdy(target.size());
    for (std::size_t u = 0; u < target.size(); ++u)
        dLdy[u] = cache.act.back()[u] - target[u];
    ParamsT<T> grads = zeros_like<T>(spec);
    backward_from(spec, params, cache, dLdy, grads);
    return grads;
}

template <typename T>
void adam_step(ParamsT<T>& params, const ParamsT<T>& grads, AdamState<T>& state,
               double lr, const AdamHyper& hp) {
    if (grads.layers.size() != params.layers.size())
        throw Error("adam_step: shape mismatch");
    const auto& K = kernels::ops<T>();
    state.t += 1;
    const double bc1 = 1.0 - std::pow(hp.beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(hp.beta2, double(state.t));
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        auto& p = params.layers[li];
        const auto& g = grads.layers[li];
        auto& m = state.m.layers[li];
        auto& v = state.v.layers[li];
        if (g.W.size() != p.W.size() || g.b.size() != p.b.size())
            throw Error("adam_step: shape mismatch at layer " + std::to_string(li));
        K.adam(p.W.data(), g.W.data(), m.W.data(), v.W.data(), T(lr), T(hp.beta1),
               T(hp.beta2), T(hp.eps_hat), T(bc1), T(bc2), p.W.size());
        K.adam(p.b.data(), g.b.data(), m.b.data(), v.b.data(), T(lr), T(hp.beta1),
               T(hp.beta2), T(hp.eps_hat), T(bc1), T(bc2), p.b.size());
    }
}

double clr_lr(std::uint64_t iteration, std::uint64_t T, double lr_min, double lr_max) {
    if (T < 2) throw Error("clr_lr: cycle length must be >= 2");
    const double phase = double(iteration % T);
    const double half = double(T) / 2.0;
    const double frac = phase <= half ? phase / half : 2.0 - phase / half;
    return lr_min + (lr_max - lr_min) * frac;
}

template <typename T>
std::vector<T> hidden_concat(const std::vector<std::vector<T>>& hidden) {
    if (hidden.empty()) throw Error("hidden_concat: empty layer list");
    std::size_t n = 0;
    for (const auto& h : hidden) {
        if (h.empty()) throw Error("hidden_concat: empty hidden vector");
        n += h.size();
    }
    std::vector<T> out;
    out.reserve(n);
    for (const auto& h : hidden) out.insert(out.end(), h.begin(), h.end());
    return out;
}

template <typename T>
double half_mse(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) throw Error("half_mse: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        s += d * d;
    }
    return 0.5 * s;
}

template struct ParamsT<float>;
template struct ParamsT<double>;

#define SINTRO_INSTANTIATE(T)                                                        \
    template ParamsT<T> zeros_like<T>(const NetworkSpec&);                           \
    template ParamsT<T> init_params<T>(const NetworkSpec&, std::uint64_t);           \
    template AdamState<T> make_adam_state<T>(const NetworkSpec&);                    \
    template ForwardCache<T> forward_cache<T>(const NetworkSpec&, const ParamsT<T>&, \
                                              const std::vector<T>&, Mode,           \
                                              std::mt19937_64*);                     \
    template ForwardResult<T> forward<T>(const NetworkSpec&, const ParamsT<T>&,      \
                                         const std::vector<T>&, Mode,                \
                                         std::mt19937_64*);                          \
    template std::vector<T> backward_from<T>(const NetworkSpec&, const ParamsT<T>&,  \
                                             const ForwardCache<T>&,                 \
                                             const std::vector<T>&, ParamsT<T>&);    \
    template ParamsT<T> backward<T>(const NetworkSpec&, const ParamsT<T>&,           \
                                    const std::vector<T>&, const std::vector<T>&);   \
    template void adam_step<T>(ParamsT<T>&, const ParamsT<T>&, AdamState<T>&,        \
                               double, const AdamHyper&);                            \
    template std::vector<T> hidden_concat<T>(const std::vector<std::vector<T>>&);    \
    template double half_mse<T>(const std::vector<T>&, const std::vector<T>&);

SINTRO_INSTANTIATE(float)
SINTRO_INSTANTIATE(double)

#undef SINTRO_INSTANTIATE

} // namespace sintro::nn
