// The box network: maps a unit image embedding to the two corners of a latent
// box, together with the volume and class-consistency objectives, their
// analytic gradients and the training loop that fits the network.
//
// Per item, with raw outputs (a, b) = net(x):
//   a^, b^   = a/|a|, b/|b|
//   lower_j  = min(a^_j, b^_j),  upper_j = max(a^_j, b^_j)      (the box)
//   X-, X+   = lower/|lower|, upper/|upper|                      (loss corners)
//   m        = (X- + X+)/2, renormalized unless raw_midpoint
//   L        = (1-alpha) * sum_i X-.X+
//            + alpha/3 * sum_i [CE(X-) + CE(X+) + CE(m)]
// CE(p) is softmax cross-entropy over logits (p . t_k) / temperature, with
// t_k the class-text rows.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regibox/core.hpp"
#include "regibox/embedding_store.hpp"
#include "regibox/optim.hpp"

namespace regibox {

enum class Activation : std::uint32_t {
    identity = 0,
    softplus = 1,
};

// Parameters live in one flat vector: for every layer, the out x in weight
// matrix (row-major) followed by the out-length bias.
template <std::floating_point Real = double>
struct BoxNetModel {
    std::vector<std::uint32_t> layer_dims;  // d, hidden..., 2d
    Activation hidden_activation = Activation::softplus;
    std::vector<Real> params;

    [[nodiscard]] std::size_t dim() const { return layer_dims.front(); }
    [[nodiscard]] std::size_t n_layers() const { return layer_dims.size() - 1; }
    [[nodiscard]] std::size_t in_width(std::size_t l) const { return layer_dims[l]; }
    [[nodiscard]] std::size_t out_width(std::size_t l) const { return layer_dims[l + 1]; }

    [[nodiscard]] std::size_t weight_offset(std::size_t l) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < l; ++k) off += (layer_dims[k] + 1) * layer_dims[k + 1];
        return off;
    }
    [[nodiscard]] std::size_t bias_offset(std::size_t l) const { return weight_offset(l) + in_width(l) * out_width(l); }

    [[nodiscard]] std::span<Real> weight(std::size_t l) {
        return {params.data() + weight_offset(l), in_width(l) * out_width(l)};
    }
    [[nodiscard]] std::span<const Real> weight(std::size_t l) const {
        return {params.data() + weight_offset(l), in_width(l) * out_width(l)};
    }
    [[nodiscard]] std::span<Real> bias(std::size_t l) { return {params.data() + bias_offset(l), out_width(l)}; }
    [[nodiscard]] std::span<const Real> bias(std::size_t l) const {
        return {params.data() + bias_offset(l), out_width(l)};
    }

    [[nodiscard]] static std::size_t param_count(std::span<const std::uint32_t> dims) {
        std::size_t n = 0;
        for (std::size_t k = 0; k + 1 < dims.size(); ++k) n += (std::size_t{dims[k]} + 1) * dims[k + 1];
        return n;
    }

    bool operator==(const BoxNetModel&) const = default;
};

template <std::floating_point Real>
void validate(const BoxNetModel<Real>& model) {
    const auto& dims = model.layer_dims;
    if (dims.size() < 2) fail(ErrorKind::data, "box net needs at least one layer");
    if (dims.front() == 0) fail(ErrorKind::data, "box net input width must be positive");
    if (dims.back() != 2 * dims.front())
        fail(ErrorKind::data, "box net output width must be twice the input width");
    for (auto w : dims)
        if (w == 0) fail(ErrorKind::data, "box net layer width must be positive");
    if (model.hidden_activation != Activation::identity && model.hidden_activation != Activation::softplus)
        fail(ErrorKind::data, "unknown activation");
    if (model.params.size() != BoxNetModel<Real>::param_count(dims))
        fail(ErrorKind::data, "box net parameter count does not match layer widths");
    if (!all_finite(std::span<const Real>(model.params))) fail(ErrorKind::numeric, "box net has non-finite parameters");
}

// Random init: weights N(0, 1/fan_in), biases zero.
template <std::floating_point Real = double>
[[nodiscard]] BoxNetModel<Real> make_box_net(std::vector<std::uint32_t> layer_dims, Activation hidden,
                                             std::uint64_t seed) {
    BoxNetModel<Real> model;
    model.layer_dims = std::move(layer_dims);
    model.hidden_activation = hidden;
    model.params.assign(BoxNetModel<Real>::param_count(model.layer_dims), Real{0});
    Rng rng(seed);
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(model.in_width(l)));
        for (auto& w : model.weight(l)) w = static_cast<Real>(scale * rng.normal());
    }
    validate(model);
    return model;
}

// d -> hidden... -> 2d. An empty hidden list gives the default single hidden layer of width d.
[[nodiscard]] inline std::vector<std::uint32_t> box_net_dims(std::uint32_t dim,
                                                             std::span<const std::uint32_t> hidden) {
    std::vector<std::uint32_t> dims{dim};
    if (hidden.empty())
        dims.push_back(dim);
    else
        dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(2 * dim);
    return dims;
}

// ---------------------------------------------------------------------------
// forward pass and corner construction

template <std::floating_point Real = double>
struct LatentBox {
    std::vector<Real> lower;
    std::vector<Real> upper;
};

struct RawCorners {
    std::vector<double> a;
    std::vector<double> b;
};

namespace detail {

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Layer activations kept for the backward pass. acts[0] is the input; acts[l]
// is the input of layer l; pre[l] the pre-activation of hidden layer l.
struct ForwardCache {
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> pre;
    std::vector<double> out;
};

template <std::floating_point Real, typename In>
void forward_cached(const BoxNetModel<Real>& model, std::span<const In> x, ForwardCache& cache) {
    const std::size_t L = model.n_layers();
    cache.acts.resize(L);
    cache.pre.resize(L);
    cache.acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = model.in_width(l);
        const std::size_t out = model.out_width(l);
        const auto W = model.weight(l);
        const auto bias = model.bias(l);
        const auto& input = cache.acts[l];
        std::vector<double>& z = (l + 1 < L) ? cache.pre[l] : cache.out;
        z.resize(out);
        for (std::size_t r = 0; r < out; ++r) {
            double s = static_cast<double>(bias[r]);
            const Real* w = W.data() + r * in;
            for (std::size_t c = 0; c < in; ++c) s += static_cast<double>(w[c]) * input[c];
            z[r] = s;
        }
        if (l + 1 < L) {
            auto& next = cache.acts[l + 1];
            next.resize(out);
            for (std::size_t r = 0; r < out; ++r)
                next[r] = model.hidden_activation == Activation::softplus ? softplus(z[r]) : z[r];
        }
    }
}

}  // namespace detail

// Raw corner pre-images: first and second halves of the network output.
template <std::floating_point Real, typename In>
[[nodiscard]] RawCorners forward(const BoxNetModel<Real>& model, std::span<const In> x) {
    if (x.size() != model.dim()) fail(ErrorKind::data, "input width does not match box net");
    if (!all_finite(std::span<const Real>(model.params))) fail(ErrorKind::numeric, "box net has non-finite parameters");
    detail::ForwardCache cache;
    detail::forward_cached(model, x, cache);
    const std::size_t d = model.dim();
    RawCorners rc;
    rc.a.assign(cache.out.begin(), cache.out.begin() + static_cast<std::ptrdiff_t>(d));
    rc.b.assign(cache.out.begin() + static_cast<std::ptrdiff_t>(d), cache.out.end());
    return rc;
}

// Normalizes both raw outputs, then orders them elementwise into lower/upper.
[[nodiscard]] inline LatentBox<double> corners_from_raw(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorKind::data, "corner pre-images differ in length");
    std::vector<double> ah(a.begin(), a.end());
    std::vector<double> bh(b.begin(), b.end());
    if (!normalize_in_place(std::span<double>(ah)) || !normalize_in_place(std::span<double>(bh)))
        fail(ErrorKind::numeric, "cannot build a box from a zero corner");
    LatentBox<double> box;
    box.lower.resize(a.size());
    box.upper.resize(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        box.lower[j] = std::min(ah[j], bh[j]);
        box.upper[j] = std::max(ah[j], bh[j]);
    }
    return box;
}

template <std::floating_point Real, typename In>
[[nodiscard]] LatentBox<double> box_of(const BoxNetModel<Real>& model, std::span<const In> x) {
    const auto rc = forward(model, x);
    return corners_from_raw(rc.a, rc.b);
}

// Unit-norm corner pair used by the losses.
[[nodiscard]] inline LatentBox<double> loss_corners(const LatentBox<double>& box) {
    LatentBox<double> c = box;
    if (!normalize_in_place(std::span<double>(c.lower)) || !normalize_in_place(std::span<double>(c.upper)))
        fail(ErrorKind::numeric, "box corner has zero norm");
    return c;
}

// ---------------------------------------------------------------------------
// losses

inline constexpr double kCornerNormTolerance = 1e-6;

// Sum over items of the inner product of the two unit corners.
[[nodiscard]] inline double box_volume_loss(std::span<const LatentBox<double>> corners) {
    double s = 0.0;
    for (std::size_t i = 0; i < corners.size(); ++i) {
        const auto& c = corners[i];
        for (const auto* v : {&c.lower, &c.upper}) {
            if (std::abs(norm(std::span<const double>(*v)) - 1.0) > kCornerNormTolerance)
                fail(ErrorKind::numeric, "corner of item " + std::to_string(i) + " is not unit norm");
        }
        s += dot(std::span<const double>(c.lower), std::span<const double>(c.upper));
    }
    return s;
}

struct CrossEntropy {
    double loss = 0.0;
    std::size_t argmax = 0;
};

namespace detail {

// Softmax cross-entropy of one point against every class-text row. When grad
// is non-empty it receives scale * dCE/dpoint (added, not assigned).
inline CrossEntropy cross_entropy(std::span<const double> point, std::uint32_t label, const ClassTextEmbeddings& text,
                                  double temperature, std::vector<double>& logits, std::span<double> grad = {},
                                  double scale = 1.0) {
    const std::size_t k = text.n_classes();
    if (label >= k) fail(ErrorKind::data, "label " + std::to_string(label) + " out of range");
    logits.resize(k);
    CrossEntropy ce;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        logits[c] = dot(point, text.row(c)) / temperature;
        if (logits[c] > best) {
            best = logits[c];
            ce.argmax = c;
        }
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += std::exp(logits[c] - best);
    ce.loss = best + std::log(sum) - logits[label];
    if (!grad.empty() && scale != 0.0) {
        for (std::size_t c = 0; c < k; ++c) {
            const double p = std::exp(logits[c] - best) / sum - (c == label ? 1.0 : 0.0);
            const double coeff = scale * p / temperature;
            const auto row = text.row(c);
            for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += coeff * static_cast<double>(row[j]);
        }
    }
    return ce;
}

// g <- (g - y (y.g)) / n : backprop through y = v/|v| with n = |v|.
inline void normalize_backward(std::span<const double> y, double n, std::span<double> g) {
    const double yg = dot(y, std::span<const double>(g));
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = (g[j] - y[j] * yg) / n;
}

}  // namespace detail

// Sum of softmax cross-entropies of unit points (row-major, dim = class-text dim).
[[nodiscard]] inline double class_consistency_loss(std::span<const double> points,
                                                   std::span<const std::uint32_t> labels,
                                                   const ClassTextEmbeddings& text, double temperature = 1.0) {
    const std::size_t d = text.dim;
    if (points.size() != labels.size() * d) fail(ErrorKind::data, "points and labels disagree in count");
    std::vector<double> logits;
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        s += detail::cross_entropy(points.subspan(i * d, d), labels[i], text, temperature, logits).loss;
    return s;
}

struct LossOptions {
    double alpha = 0.5;
    double temperature = 1.0;
    bool renormalize_midpoint = true;
};

struct LossParts {
    double total = 0.0;
    double box_volume = 0.0;
    double cc_lower = 0.0;
    double cc_upper = 0.0;
    double cc_mid = 0.0;
    // items whose lower corner, upper corner and midpoint all zero-shot to the label
    std::size_t corners_correct = 0;
    std::size_t items = 0;

    [[nodiscard]] double cc_average() const { return (cc_lower + cc_upper + cc_mid) / 3.0; }
    [[nodiscard]] double corner_accuracy() const {
        return items == 0 ? 0.0 : static_cast<double>(corners_correct) / static_cast<double>(items);
    }

    LossParts& operator+=(const LossParts& o) {
        total += o.total;
        box_volume += o.box_volume;
        cc_lower += o.cc_lower;
        cc_upper += o.cc_upper;
        cc_mid += o.cc_mid;
        corners_correct += o.corners_correct;
        items += o.items;
        return *this;
    }
};

namespace detail {

inline void check_options(const LossOptions& opts) {
    if (!(opts.alpha >= 0.0 && opts.alpha <= 1.0)) fail(ErrorKind::usage, "alpha must lie in [0, 1]");
    if (!(opts.temperature > 0.0)) fail(ErrorKind::usage, "temperature must be positive");
}

struct ItemWorkspace {
    ForwardCache cache;
    std::vector<double> logits;
};

// Loss parts for one item; when grad is non-empty, accumulates d(item total)/d(params).
template <std::floating_point Real>
LossParts item_loss(const BoxNetModel<Real>& model, std::span<const float> x, std::uint32_t label,
                    const ClassTextEmbeddings& text, const LossOptions& opts, ItemWorkspace& ws,
                    std::span<double> grad) {
    const std::size_t d = model.dim();
    forward_cached(model, x, ws.cache);
    const auto& out = ws.cache.out;

    std::vector<double> ah(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(d));
    std::vector<double> bh(out.begin() + static_cast<std::ptrdiff_t>(d), out.end());
    const double na = norm(std::span<const double>(ah));
    const double nb = norm(std::span<const double>(bh));
    if (!(na > 0.0) || !(nb > 0.0) || !std::isfinite(na) || !std::isfinite(nb))
        fail(ErrorKind::numeric, "box net produced a zero or non-finite corner");
    for (auto& v : ah) v /= na;
    for (auto& v : bh) v /= nb;

    // Ties select the a-branch for both corners.
    std::vector<double> xm(d), xp(d);
    std::vector<char> a_low(d), a_up(d);
    for (std::size_t j = 0; j < d; ++j) {
        a_low[j] = ah[j] <= bh[j];
        a_up[j] = ah[j] >= bh[j];
        xm[j] = a_low[j] ? ah[j] : bh[j];
        xp[j] = a_up[j] ? ah[j] : bh[j];
    }
    const double nl = norm(std::span<const double>(xm));
    const double nu = norm(std::span<const double>(xp));
    if (!(nl > 0.0) || !(nu > 0.0)) fail(ErrorKind::numeric, "box corner has zero norm");
    for (auto& v : xm) v /= nl;
    for (auto& v : xp) v /= nu;

    std::vector<double> mid(d);
    for (std::size_t j = 0; j < d; ++j) mid[j] = 0.5 * (xm[j] + xp[j]);
    double nmid = 1.0;
    if (opts.renormalize_midpoint) {
        nmid = norm(std::span<const double>(mid));
        if (!(nmid > 0.0)) fail(ErrorKind::numeric, "box midpoint is the zero vector");
        for (auto& v : mid) v /= nmid;
    }

    const bool want_grad = !grad.empty();
    const double w_bv = 1.0 - opts.alpha;
    const double w_cc = opts.alpha / 3.0;
    std::vector<double> gxm, gxp, gmid;
    if (want_grad) {
        gxm.assign(d, 0.0);
        gxp.assign(d, 0.0);
        gmid.assign(d, 0.0);
    }

    LossParts parts;
    parts.items = 1;
    parts.box_volume = dot(std::span<const double>(xm), std::span<const double>(xp));
    const auto ce_l = cross_entropy(xm, label, text, opts.temperature, ws.logits, gxm, w_cc);
    const auto ce_u = cross_entropy(xp, label, text, opts.temperature, ws.logits, gxp, w_cc);
    const auto ce_m = cross_entropy(mid, label, text, opts.temperature, ws.logits, gmid, w_cc);
    parts.cc_lower = ce_l.loss;
    parts.cc_upper = ce_u.loss;
    parts.cc_mid = ce_m.loss;
    parts.total = w_bv * parts.box_volume + w_cc * (ce_l.loss + ce_u.loss + ce_m.loss);
    parts.corners_correct = (ce_l.argmax == label && ce_u.argmax == label && ce_m.argmax == label) ? 1 : 0;
    if (!std::isfinite(parts.total)) fail(ErrorKind::numeric, "non-finite loss");
    if (!want_grad) return parts;

    // midpoint -> corners
    if (opts.renormalize_midpoint) normalize_backward(mid, nmid, gmid);
    for (std::size_t j = 0; j < d; ++j) {
        gxm[j] += w_bv * xp[j] + 0.5 * gmid[j];
        gxp[j] += w_bv * xm[j] + 0.5 * gmid[j];
    }
    // corner normalization -> ordered box -> normalized raw outputs
    normalize_backward(xm, nl, gxm);
    normalize_backward(xp, nu, gxp);
    std::vector<double> ga(d, 0.0), gb(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        (a_low[j] ? ga[j] : gb[j]) += gxm[j];
        (a_up[j] ? ga[j] : gb[j]) += gxp[j];
    }
    normalize_backward(ah, na, ga);
    normalize_backward(bh, nb, gb);

    std::vector<double> g(2 * d);
    std::copy(ga.begin(), ga.end(), g.begin());
    std::copy(gb.begin(), gb.end(), g.begin() + static_cast<std::ptrdiff_t>(d));
    for (std::size_t l = model.n_layers(); l-- > 0;) {
        const std::size_t in = model.in_width(l);
        const std::size_t outw = model.out_width(l);
        const auto& input = ws.cache.acts[l];
        double* gw = grad.data() + model.weight_offset(l);
        double* gbias = grad.data() + model.bias_offset(l);
        for (std::size_t r = 0; r < outw; ++r) {
            gbias[r] += g[r];
            for (std::size_t c = 0; c < in; ++c) gw[r * in + c] += g[r] * input[c];
        }
        if (l == 0) break;
        const auto W = model.weight(l);
        std::vector<double> gin(in, 0.0);
        for (std::size_t r = 0; r < outw; ++r) {
            const Real* w = W.data() + r * in;
            for (std::size_t c = 0; c < in; ++c) gin[c] += static_cast<double>(w[c]) * g[r];
        }
        if (model.hidden_activation == Activation::softplus) {
            const auto& pre = ws.cache.pre[l - 1];
            for (std::size_t c = 0; c < in; ++c) gin[c] *= sigmoid(pre[c]);
        }
        g = std::move(gin);
    }
    return parts;
}

inline constexpr std::size_t kLossChunk = 32;

template <std::floating_point Real>
LossParts accumulate(const EmbeddingSet& set, std::span<const std::size_t> indices, const BoxNetModel<Real>& model,
                     const ClassTextEmbeddings& text, const LossOptions& opts, std::vector<double>* grad) {
    check_options(opts);
    if (set.dim != model.dim() || text.dim != model.dim())
        fail(ErrorKind::data, "embedding, class-text and box net dims disagree");
    validate(model);
    const std::size_t n = indices.size();
    const std::size_t chunks = chunk_count(n, kLossChunk);
    std::vector<LossParts> part(chunks);
    std::vector<std::vector<double>> grads(grad ? chunks : 0);
    parallel_chunks(n, kLossChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
        ItemWorkspace ws;
        std::span<double> g;
        if (grad) {
            grads[c].assign(model.params.size(), 0.0);
            g = grads[c];
        }
        for (std::size_t k = begin; k < end; ++k) {
            const std::size_t i = indices[k];
            part[c] += item_loss(model, set.row(i), set.labels[i], text, opts, ws, g);
        }
    });
    LossParts total;
    for (const auto& p : part) total += p;
    total.total = (1.0 - opts.alpha) * total.box_volume + opts.alpha * (total.cc_lower + total.cc_upper + total.cc_mid) / 3.0;
    if (grad) {
        grad->assign(model.params.size(), 0.0);
        for (const auto& g : grads)
            for (std::size_t k = 0; k < g.size(); ++k) (*grad)[k] += g[k];
        if (!all_finite(std::span<const double>(*grad))) fail(ErrorKind::numeric, "non-finite gradient");
    }
    return total;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace detail

// Combined objective over the given items (sums, not means).
template <std::floating_point Real>
[[nodiscard]] LossParts combined_loss(const EmbeddingSet& set, std::span<const std::size_t> indices,
                                      const BoxNetModel<Real>& model, const ClassTextEmbeddings& text,
                                      const LossOptions& opts) {
    return detail::accumulate(set, indices, model, text, opts, nullptr);
}

template <std::floating_point Real>
[[nodiscard]] LossParts combined_loss(const EmbeddingSet& set, const BoxNetModel<Real>& model,
                                      const ClassTextEmbeddings& text, const LossOptions& opts) {
    const auto idx = detail::all_indices(set.count());
    return combined_loss(set, idx, model, text, opts);
}

struct LossAndGradient {
    LossParts parts;
    std::vector<double> gradient;  // same layout as BoxNetModel::params
};

// Analytic gradient of the combined objective w.r.t. every parameter.
template <std::floating_point Real>
[[nodiscard]] LossAndGradient backward(const EmbeddingSet& set, std::span<const std::size_t> indices,
                                       const BoxNetModel<Real>& model, const ClassTextEmbeddings& text,
                                       const LossOptions& opts) {
    LossAndGradient out;
    out.parts = detail::accumulate(set, indices, model, text, opts, &out.gradient);
    return out;
}

template <std::floating_point Real>
[[nodiscard]] LossAndGradient backward(const EmbeddingSet& set, const BoxNetModel<Real>& model,
                                       const ClassTextEmbeddings& text, const LossOptions& opts) {
    const auto idx = detail::all_indices(set.count());
    return backward(set, idx, model, text, opts);
}

// ---------------------------------------------------------------------------
// training

struct Stage1Config {
    LossOptions loss;
    std::uint32_t epochs = 100;
    std::uint32_t batch_size = 512;
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> hidden;  // empty: one hidden layer of width d
    Activation activation = Activation::softplus;
};

inline void validate(const Stage1Config& c) {
    detail::check_options(c.loss);
    if (c.epochs < 1) fail(ErrorKind::usage, "epochs must be >= 1");
    if (c.batch_size < 1) fail(ErrorKind::usage, "batch_size must be >= 1");
    if (!(c.learning_rate > 0.0)) fail(ErrorKind::usage, "learning_rate must be positive");
    if (!(c.weight_decay >= 0.0)) fail(ErrorKind::usage, "weight_decay must be >= 0");
}

// Per-item means over the full training set, evaluated after each epoch.
struct EpochRecord {
    std::uint32_t epoch = 0;  // 0 is the untrained model
    double total = 0.0;
    double box_volume = 0.0;
    double cc_average = 0.0;
    double train_corner_accuracy = 0.0;
    std::optional<double> val_corner_accuracy;
};

struct TrainTrace {
    EpochRecord initial;
    std::vector<EpochRecord> epochs;
    std::uint32_t selected_epoch = 0;
};

struct Stage1Result {
    BoxNetModel<double> model;        // best validation corner accuracy (latest epoch on ties)
    BoxNetModel<double> final_model;  // after the last epoch
    TrainTrace trace;
};

namespace detail {

template <std::floating_point Real>
EpochRecord evaluate_epoch(std::uint32_t epoch, const EmbeddingSet& train, const EmbeddingSet& val,
                           const BoxNetModel<Real>& model, const ClassTextEmbeddings& text, const LossOptions& opts) {
    const auto p = combined_loss(train, model, text, opts);
    const double n = static_cast<double>(p.items);
    EpochRecord r;
    r.epoch = epoch;
    r.total = p.total / n;
    r.box_volume = p.box_volume / n;
    r.cc_average = p.cc_average() / n;
    r.train_corner_accuracy = p.corner_accuracy();
    if (val.count() > 0) r.val_corner_accuracy = combined_loss(val, model, text, opts).corner_accuracy();
    return r;
}

}  // namespace detail

[[nodiscard]] inline Stage1Result train_stage1(const EmbeddingSet& train, const EmbeddingSet& val,
                                               const ClassTextEmbeddings& text, const Stage1Config& config) {
    validate(config);
    if (train.count() == 0) fail(ErrorKind::data, "empty training set");
    if (train.dim != text.dim || (val.count() > 0 && val.dim != text.dim))
        fail(ErrorKind::data, "training, validation and class-text dims disagree");

    auto model = make_box_net<double>(box_net_dims(train.dim, config.hidden), config.activation,
                                      derive_seed(config.seed, "boxnet.init"));
    AdamW<double> opt(model.params.size(), {config.learning_rate, config.weight_decay});
    Rng rng(derive_seed(config.seed, "boxnet.shuffle"));

    Stage1Result result;
    result.trace.initial = detail::evaluate_epoch(0, train, val, model, text, config.loss);
    result.model = model;
    double best = -1.0;

    auto order = detail::all_indices(train.count());
    for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            const std::span<const std::size_t> batch(order.data() + begin, end - begin);
            const auto lg = backward(train, batch, model, text, config.loss);
            opt.step(model.params, lg.gradient);
        }
        auto rec = detail::evaluate_epoch(epoch, train, val, model, text, config.loss);
        const double score = rec.val_corner_accuracy.value_or(rec.train_corner_accuracy);
        if (score >= best) {
            best = score;
            result.model = model;
            result.trace.selected_epoch = epoch;
        }
        result.trace.epochs.push_back(rec);
    }
    result.final_model = std::move(model);
    return result;
}

// ---------------------------------------------------------------------------
// checkpoint: "RGBM" | u32 version | u32 n_dims | n_dims x u32 | u32 activation |
//             u32 n_params | n_params x f32

template <std::floating_point Real>
[[nodiscard]] std::vector<char> encode(const BoxNetModel<Real>& model) {
    validate(model);
    detail::ByteWriter w;
    w.raw("RGBM");
    w.u32(kFormatVersion);
    w.u32(detail::checked_u32(model.layer_dims.size(), "layer count"));
    for (auto v : model.layer_dims) w.u32(v);
    w.u32(static_cast<std::uint32_t>(model.hidden_activation));
    w.u32(detail::checked_u32(model.params.size(), "parameter count"));
    for (auto p : model.params) w.f32(static_cast<float>(p));
    return w.bytes();
}

template <std::floating_point Real = double>
[[nodiscard]] BoxNetModel<Real> decode_box_net(std::vector<char> bytes, std::string source = "<memory>") {
    detail::ByteReader r(std::move(bytes), std::move(source));
    detail::read_header(r, "RGBM");
    const std::uint32_t n_dims = r.u32("layer count");
    r.need(static_cast<std::size_t>(n_dims) * 4u, "layer widths");
    BoxNetModel<Real> model;
    model.layer_dims.resize(n_dims);
    for (auto& v : model.layer_dims) v = r.u32("layer widths");
    model.hidden_activation = static_cast<Activation>(r.u32("activation"));
    const std::uint32_t n_params = r.u32("parameter count");
    r.need(static_cast<std::size_t>(n_params) * 4u, "parameters");
    model.params.resize(n_params);
    for (auto& p : model.params) p = static_cast<Real>(r.f32("parameters"));
    r.expect_end();
    validate(model);
    return model;
}

template <std::floating_point Real>
void write_box_net_file(const BoxNetModel<Real>& model, const std::filesystem::path& path) {
    detail::dump(path, encode(model));
}

template <std::floating_point Real = double>
[[nodiscard]] BoxNetModel<Real> read_box_net_file(const std::filesystem::path& path) {
    return decode_box_net<Real>(detail::slurp(path), path.string());
}

}  // namespace regibox
