// Reference computations written independently of the library code paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "regibox/regibox.hpp"

namespace oracle {

using Vec = std::vector<long double>;

inline Vec unit(Vec v) {
    long double n = 0;
    for (auto x : v) n += x * x;
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
    return v;
}

inline long double inner(const Vec& a, const Vec& b) {
    long double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

// -log softmax(point . text / T)[label], via log-sum-exp over all classes.
inline long double ce(const Vec& p, std::uint32_t label, const regibox::ClassTextEmbeddings& text, long double T) {
    std::vector<long double> z;
    for (std::size_t c = 0; c < text.n_classes(); ++c) {
        Vec t(text.row(c).begin(), text.row(c).end());
        z.push_back(inner(p, t) / T);
    }
    const long double m = *std::max_element(z.begin(), z.end());
    long double s = 0;
    for (auto v : z) s += std::exp(v - m);
    return m + std::log(s) - z[label];
}

// Plain MLP forward from the flat parameter layout.
inline Vec mlp(const regibox::BoxNetModel<double>& model, std::span<const float> x) {
    Vec h(x.begin(), x.end());
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        const auto W = model.weight(l);
        const auto b = model.bias(l);
        Vec z(model.out_width(l));
        for (std::size_t r = 0; r < z.size(); ++r) {
            long double s = b[r];
            for (std::size_t c = 0; c < h.size(); ++c) s += W[r * h.size() + c] * h[c];
            z[r] = s;
        }
        if (l + 1 < model.n_layers() && model.hidden_activation == regibox::Activation::softplus)
            for (auto& v : z) v = std::log1p(std::exp(v));
        h = std::move(z);
    }
    return h;
}

struct Parts {
    long double bv = 0, lower = 0, upper = 0, mid = 0;
    long double total(long double alpha) const { return (1 - alpha) * bv + alpha * (lower + upper + mid) / 3; }
};

inline Parts loss(const regibox::EmbeddingSet& set, const regibox::BoxNetModel<double>& model,
                  const regibox::ClassTextEmbeddings& text, long double T = 1, bool renorm_mid = true) {
    Parts p;
    const std::size_t d = set.dim;
    for (std::size_t i = 0; i < set.count(); ++i) {
        const Vec out = mlp(model, set.row(i));
        const Vec a = unit(Vec(out.begin(), out.begin() + d));
        const Vec b = unit(Vec(out.begin() + d, out.end()));
        Vec lo(d), hi(d);
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = std::min(a[j], b[j]);
            hi[j] = std::max(a[j], b[j]);
        }
        lo = unit(lo);
        hi = unit(hi);
        Vec m(d);
        for (std::size_t j = 0; j < d; ++j) m[j] = (lo[j] + hi[j]) / 2;
        if (renorm_mid) m = unit(m);
        p.bv += inner(lo, hi);
        p.lower += ce(lo, set.labels[i], text, T);
        p.upper += ce(hi, set.labels[i], text, T);
        p.mid += ce(m, set.labels[i], text, T);
    }
    return p;
}

// Smallest |a_hat_j - b_hat_j| over the set: distance to the min/max kink.
inline double kink_margin(const regibox::EmbeddingSet& set, const regibox::BoxNetModel<double>& model) {
    double best = 1e300;
    const std::size_t d = set.dim;
    for (std::size_t i = 0; i < set.count(); ++i) {
        const Vec out = mlp(model, set.row(i));
        const Vec a = unit(Vec(out.begin(), out.begin() + d));
        const Vec b = unit(Vec(out.begin() + d, out.end()));
        for (std::size_t j = 0; j < d; ++j) best = std::min(best, static_cast<double>(std::abs(a[j] - b[j])));
    }
    return best;
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t params = 0;
};

// Central differences of the library loss against its analytic gradient.
// Relative error uses max(|analytic|, |numeric|, floor) as denominator.
inline GradCheck check_gradient(const regibox::EmbeddingSet& set, regibox::BoxNetModel<double> model,
                                const regibox::ClassTextEmbeddings& text, const regibox::LossOptions& opts,
                                double h = 1e-4, double floor = 1e-6) {
    const auto analytic = regibox::backward(set, model, text, opts).gradient;
    GradCheck r;
    r.params = model.params.size();
    for (std::size_t k = 0; k < model.params.size(); ++k) {
        const double keep = model.params[k];
        model.params[k] = keep + h;
        const double up = regibox::combined_loss(set, model, text, opts).total;
        model.params[k] = keep - h;
        const double down = regibox::combined_loss(set, model, text, opts).total;
        model.params[k] = keep;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), floor});
        r.max_rel_error = std::max(r.max_rel_error, std::abs(analytic[k] - numeric) / denom);
    }
    return r;
}

// Random unit-row set with labels below k.
inline regibox::EmbeddingSet random_set(std::uint32_t n, std::uint32_t d, std::uint32_t k, regibox::Rng& rng) {
    regibox::EmbeddingSet s;
    s.dim = d;
    std::vector<double> v(d);
    for (std::uint32_t i = 0; i < n; ++i) {
        do {
            for (auto& x : v) x = rng.normal();
        } while (!regibox::normalize_in_place(std::span<double>(v)));
        for (double x : v) s.data.push_back(static_cast<float>(x));
        s.labels.push_back(static_cast<std::uint32_t>(rng.below(k)));
    }
    return s;
}

inline regibox::ClassTextEmbeddings random_text(std::uint32_t k, std::uint32_t d, regibox::Rng& rng) {
    regibox::ClassTextEmbeddings t;
    t.dim = d;
    const auto s = random_set(k, d, 1, rng);
    t.data = s.data;
    for (std::uint32_t c = 0; c < k; ++c) t.class_names.push_back("k" + std::to_string(c));
    return t;
}

}  // namespace oracle
