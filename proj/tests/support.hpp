#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "regibox/regibox.hpp"

namespace testing {

// Fresh, empty scratch directory per test name.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "regibox_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline regibox::EmbeddingSet make_set(std::uint32_t dim, std::vector<float> data, std::vector<std::uint32_t> labels) {
    regibox::EmbeddingSet s;
    s.dim = dim;
    s.data = std::move(data);
    s.labels = std::move(labels);
    return s;
}

// Standard basis rows e_0..e_{k-1} in R^dim as class text.
inline regibox::ClassTextEmbeddings basis_text(std::uint32_t k, std::uint32_t dim) {
    regibox::ClassTextEmbeddings t;
    t.dim = dim;
    t.data.assign(std::size_t{k} * dim, 0.0f);
    for (std::uint32_t c = 0; c < k; ++c) {
        t.data[std::size_t{c} * dim + c] = 1.0f;
        t.class_names.push_back("c" + std::to_string(c));
    }
    return t;
}

inline std::vector<double> unit_gaussian(std::size_t d, regibox::Rng& rng) {
    std::vector<double> v(d);
    do {
        for (auto& x : v) x = rng.normal();
    } while (!regibox::normalize_in_place(std::span<double>(v)));
    return v;
}

inline std::vector<char> file_bytes(const std::filesystem::path& p) { return regibox::detail::slurp(p); }

}  // namespace testing
