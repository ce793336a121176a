// Latent augmentation: uniform draws from each image's box.
#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "regibox/box_net.hpp"
#include "regibox/core.hpp"
#include "regibox/embedding_store.hpp"

namespace regibox {

struct AugmentationConfig {
    std::uint32_t samples_per_image = 5;
    std::uint64_t seed = 0;
    bool renormalize_samples = true;
};

// Sample counts used for the three benchmark scales.
inline constexpr std::uint32_t kSamplesSmallDataset = 40;
inline constexpr std::uint32_t kSamplesMediumDataset = 5;
inline constexpr std::uint32_t kSamplesLargeDataset = 3;

namespace detail {

inline void check_box(const LatentBox<double>& box) {
    if (box.lower.size() != box.upper.size()) fail(ErrorKind::data, "box corners differ in length");
    for (std::size_t j = 0; j < box.lower.size(); ++j)
        if (!(box.lower[j] <= box.upper[j])) fail(ErrorKind::data, "box has lower > upper in dimension " + std::to_string(j));
}

// One coordinate-wise uniform point inside the box; never leaves [lower, upper].
inline void draw_in_box(const LatentBox<double>& box, Rng& rng, std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double lo = box.lower[j];
        const double hi = box.upper[j];
        out[j] = std::min(hi, lo + (hi - lo) * rng.uniform());
    }
}

}  // namespace detail

// k points drawn uniformly from the box, unit-normalized unless renormalize is
// false (in which case the raw in-box points are returned). A draw that lands
// on the zero vector is redrawn once before failing.
[[nodiscard]] inline std::vector<std::vector<double>> sample_from_box(const LatentBox<double>& box, std::uint32_t k,
                                                                      std::uint64_t seed, bool renormalize = true) {
    detail::check_box(box);
    Rng rng(seed);
    std::vector<std::vector<double>> out;
    out.reserve(k);
    for (std::uint32_t s = 0; s < k; ++s) {
        std::vector<double> p(box.lower.size());
        bool ok = false;
        for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
            detail::draw_in_box(box, rng, p);
            ok = norm(std::span<const double>(p)) > 0.0;
        }
        if (!ok) fail(ErrorKind::numeric, "box sample collapsed to the zero vector twice");
        if (renormalize) normalize_in_place(std::span<double>(p));
        out.push_back(std::move(p));
    }
    return out;
}

struct AugmentedSet {
    EmbeddingSet set;                        // originals first, then k samples per source in source order
    std::vector<std::uint32_t> source_index;  // row -> originating training row
};

[[nodiscard]] inline std::uint64_t image_seed(std::uint64_t seed, std::size_t index) {
    return splitmix64(derive_seed(seed, "augment") ^ static_cast<std::uint64_t>(index));
}

template <std::floating_point Real>
[[nodiscard]] AugmentedSet augment_dataset(const EmbeddingSet& train, const BoxNetModel<Real>& model,
                                           const AugmentationConfig& config) {
    if (train.dim != model.dim()) fail(ErrorKind::data, "training set dim does not match box net");
    const std::size_t n = train.count();
    const std::size_t d = train.dim;
    const std::size_t k = config.samples_per_image;

    AugmentedSet out;
    out.set.dim = train.dim;
    out.set.data.resize(n * (1 + k) * d);
    out.set.labels.resize(n * (1 + k));
    out.source_index.resize(n * (1 + k));
    std::copy(train.data.begin(), train.data.end(), out.set.data.begin());
    std::copy(train.labels.begin(), train.labels.end(), out.set.labels.begin());
    for (std::size_t i = 0; i < n; ++i) out.source_index[i] = static_cast<std::uint32_t>(i);
    if (k == 0) return out;

    parallel_chunks(n, 16, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto box = box_of(model, train.row(i));
            const auto samples =
                sample_from_box(box, static_cast<std::uint32_t>(k), image_seed(config.seed, i), config.renormalize_samples);
            for (std::size_t s = 0; s < k; ++s) {
                const std::size_t row = n + i * k + s;
                for (std::size_t j = 0; j < d; ++j) out.set.data[row * d + j] = static_cast<float>(samples[s][j]);
                out.set.labels[row] = train.labels[i];
                out.source_index[row] = static_cast<std::uint32_t>(i);
            }
        }
    });
    return out;
}

// Sidecar manifest for an augmented set file.
[[nodiscard]] inline nlohmann::ordered_json augmentation_manifest(const AugmentedSet& aug, const AugmentationConfig& config,
                                                                  std::size_t original_count) {
    nlohmann::ordered_json j;
    j["format"] = "RGBX";
    j["count"] = aug.set.count();
    j["dim"] = aug.set.dim;
    j["original_count"] = original_count;
    j["samples_per_image"] = config.samples_per_image;
    j["seed"] = config.seed;
    j["renormalize_samples"] = config.renormalize_samples;
    j["source_indices"] = aug.source_index;
    return j;
}

}  // namespace regibox
