// Labelled hypersphere clusters with controllable spread and domain shift.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "regibox/core.hpp"
#include "regibox/embedding_store.hpp"

namespace regibox {

struct SyntheticSpec {
    std::uint32_t dim = 16;
    std::uint32_t n_classes = 4;
    std::uint32_t per_class = 100;
    double spread_sigma = 0.1;
    std::vector<double> class_sigmas;  // per-class override; empty means spread_sigma for all
    std::vector<double> domain_shift;  // added before renormalization; empty means zero
    std::uint64_t seed = 0;
    bool orthogonal_means = true;

    [[nodiscard]] double sigma(std::size_t c) const { return class_sigmas.empty() ? spread_sigma : class_sigmas[c]; }
};

namespace detail {

inline void check(const SyntheticSpec& spec) {
    if (spec.dim == 0) fail(ErrorKind::usage, "synthetic dim must be positive");
    if (spec.n_classes == 0) fail(ErrorKind::usage, "synthetic n_classes must be positive");
    if (spec.per_class == 0) fail(ErrorKind::usage, "synthetic per_class must be >= 1");
    if (!(spec.spread_sigma >= 0.0)) fail(ErrorKind::usage, "spread_sigma must be >= 0");
    if (!spec.class_sigmas.empty()) {
        if (spec.class_sigmas.size() != spec.n_classes)
            fail(ErrorKind::usage, "class_sigmas must have one entry per class");
        for (double s : spec.class_sigmas)
            if (!(s >= 0.0)) fail(ErrorKind::usage, "class sigma must be >= 0");
    }
    if (!spec.domain_shift.empty()) {
        if (spec.domain_shift.size() != spec.dim) fail(ErrorKind::usage, "domain_shift must have dim entries");
        if (!all_finite(std::span<const double>(spec.domain_shift)))
            fail(ErrorKind::usage, "domain_shift must be finite");
    }
    if (spec.orthogonal_means && spec.dim < spec.n_classes)
        fail(ErrorKind::usage, "orthogonal class means need dim >= n_classes (dim " + std::to_string(spec.dim) +
                                   ", classes " + std::to_string(spec.n_classes) + ")");
}

inline std::vector<double> unit(std::vector<double> v) {
    if (!normalize_in_place(std::span<double>(v))) fail(ErrorKind::numeric, "zero vector during generation");
    return v;
}

}  // namespace detail

// Unit class means, n_classes x dim, row-major. With orthogonal_means they are
// Gram-Schmidt orthonormalized Gaussian draws.
[[nodiscard]] inline std::vector<double> class_means(const SyntheticSpec& spec) {
    detail::check(spec);
    const std::size_t d = spec.dim;
    Rng rng(derive_seed(spec.seed, "synthetic.means"));
    std::vector<double> means;
    means.reserve(spec.n_classes * d);
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        std::vector<double> v(d);
        for (;;) {
            for (auto& x : v) x = rng.normal();
            if (spec.orthogonal_means) {
                for (std::size_t p = 0; p < c; ++p) {
                    std::span<const double> prev(means.data() + p * d, d);
                    const double proj = dot(std::span<const double>(v), prev);
                    for (std::size_t j = 0; j < d; ++j) v[j] -= proj * prev[j];
                }
            }
            if (norm(std::span<const double>(v)) > 1e-6) break;
        }
        v = detail::unit(std::move(v));
        for (std::size_t p = 0; p < c; ++p) {
            std::span<const double> prev(means.data() + p * d, d);
            if (dot(std::span<const double>(v), prev) > 1.0 - 1e-9) fail(ErrorKind::numeric, "duplicate class mean");
        }
        means.insert(means.end(), v.begin(), v.end());
    }
    return means;
}

// Draws per_class samples of every class (class-major order) around the given means.
[[nodiscard]] inline EmbeddingSet sample_clusters(const SyntheticSpec& spec, std::span<const double> means,
                                                  std::uint64_t sample_seed) {
    detail::check(spec);
    const std::size_t d = spec.dim;
    Rng rng(sample_seed);
    EmbeddingSet set;
    set.dim = spec.dim;
    set.labels.reserve(static_cast<std::size_t>(spec.n_classes) * spec.per_class);
    set.data.reserve(set.labels.capacity() * d);
    std::vector<double> v(d);
    for (std::uint32_t c = 0; c < spec.n_classes; ++c) {
        const double sigma = spec.sigma(c);
        for (std::uint32_t k = 0; k < spec.per_class; ++k) {
            for (std::size_t j = 0; j < d; ++j) {
                v[j] = means[c * d + j];
                if (sigma > 0.0) v[j] += sigma * rng.normal();
                if (!spec.domain_shift.empty()) v[j] += spec.domain_shift[j];
            }
            if (!normalize_in_place(std::span<double>(v)))
                fail(ErrorKind::numeric, "generated sample collapsed to zero");
            for (double x : v) set.data.push_back(static_cast<float>(x));
            set.labels.push_back(c);
        }
    }
    return set;
}

// Class-text table whose rows are the class means, named class_0, class_1, ...
[[nodiscard]] inline ClassTextEmbeddings class_text_from_means(std::span<const double> means, std::uint32_t dim) {
    ClassTextEmbeddings text;
    text.dim = dim;
    const std::size_t k = means.size() / dim;
    std::vector<double> v(dim);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < dim; ++j) v[j] = means[c * dim + j];
        v = detail::unit(std::move(v));
        for (double x : v) text.data.push_back(static_cast<float>(x));
        text.class_names.push_back("class_" + std::to_string(c));
    }
    return text;
}

[[nodiscard]] inline std::pair<EmbeddingSet, ClassTextEmbeddings> generate(const SyntheticSpec& spec) {
    const auto means = class_means(spec);
    return {sample_clusters(spec, means, derive_seed(spec.seed, "synthetic.samples")),
            class_text_from_means(means, spec.dim)};
}

// Seeded random unit direction scaled to the given magnitude.
[[nodiscard]] inline std::vector<double> random_shift(std::uint32_t dim, double magnitude, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "synthetic.shift"));
    std::vector<double> v(dim);
    do {
        for (auto& x : v) x = rng.normal();
    } while (norm(std::span<const double>(v)) < 1e-6);
    v = detail::unit(std::move(v));
    for (auto& x : v) x *= magnitude;
    return v;
}

// Replaces each row by normalize(row + shift); labels are unchanged.
[[nodiscard]] inline EmbeddingSet shift_domain(const EmbeddingSet& set, std::span<const double> shift) {
    if (shift.size() != set.dim) fail(ErrorKind::data, "shift length does not match dim");
    if (!all_finite(shift)) fail(ErrorKind::data, "shift must be finite");
    EmbeddingSet out = set;
    std::vector<double> v(set.dim);
    for (std::size_t i = 0; i < set.count(); ++i) {
        auto r = set.row(i);
        for (std::size_t j = 0; j < set.dim; ++j) v[j] = static_cast<double>(r[j]) + shift[j];
        if (!normalize_in_place(std::span<double>(v)))
            fail(ErrorKind::numeric, "row " + std::to_string(i) + " + shift is the zero vector");
        auto o = out.row(i);
        for (std::size_t j = 0; j < set.dim; ++j) o[j] = static_cast<float>(v[j]);
    }
    return out;
}

// Full bundle for experiments: a train pool split into train/val, an
// in-domain test set, and an out-of-domain test set displaced by a random
// shift of the given magnitude. All parts share the same class means.
struct SyntheticBundleSpec {
    SyntheticSpec base;
    double val_fraction = 0.2;
    std::uint32_t test_per_class = 50;
    double shift_magnitude = 0.5;  // 0 disables the out-of-domain set
};

[[nodiscard]] inline DatasetBundle make_synthetic_bundle(const SyntheticBundleSpec& bs) {
    SyntheticSpec spec = bs.base;
    spec.domain_shift.clear();
    const auto means = class_means(spec);

    DatasetBundle b;
    b.class_text = class_text_from_means(means, spec.dim);
    auto pool = sample_clusters(spec, means, derive_seed(spec.seed, "synthetic.train"));
    std::tie(b.train, b.val) = split_train_val(pool, bs.val_fraction, derive_seed(spec.seed, "synthetic.split"));

    SyntheticSpec test = spec;
    test.per_class = bs.test_per_class;
    b.test_in_domain = sample_clusters(test, means, derive_seed(spec.seed, "synthetic.test_in"));
    if (bs.shift_magnitude > 0.0) {
        test.domain_shift = random_shift(spec.dim, bs.shift_magnitude, spec.seed);
        b.test_out_domain = sample_clusters(test, means, derive_seed(spec.seed, "synthetic.test_out"));
    }
    return b;
}

}  // namespace regibox
