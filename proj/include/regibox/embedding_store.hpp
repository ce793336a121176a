// Embedding sets, class-text tables and their on-disk formats.
//
// Embedding file (little-endian):
//   "RGBX" | u32 version=1 | u32 count | u32 dim | count x u32 labels | count*dim x f32
// Class-text file (little-endian):
//   "RGBT" | u32 version=1 | u32 n_classes | u32 dim |
//   n_classes x (u32 name_len, UTF-8 name bytes) | n_classes*dim x f32
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "regibox/core.hpp"

namespace regibox {

inline constexpr double kUnitNormTolerance = 1e-3;
inline constexpr std::uint32_t kFormatVersion = 1;

struct EmbeddingSet {
    std::uint32_t dim = 0;
    std::vector<float> data;            // row-major count x dim
    std::vector<std::uint32_t> labels;  // one per row

    [[nodiscard]] std::size_t count() const noexcept { return labels.size(); }
    [[nodiscard]] std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
    [[nodiscard]] std::span<float> row(std::size_t i) { return {data.data() + i * dim, dim}; }

    bool operator==(const EmbeddingSet&) const = default;
};

struct ClassTextEmbeddings {
    std::uint32_t dim = 0;
    std::vector<float> data;  // n_classes x dim
    std::vector<std::string> class_names;

    [[nodiscard]] std::size_t n_classes() const noexcept { return class_names.size(); }
    [[nodiscard]] std::span<const float> row(std::size_t c) const { return {data.data() + c * dim, dim}; }

    bool operator==(const ClassTextEmbeddings&) const = default;
};

struct DatasetBundle {
    EmbeddingSet train;
    EmbeddingSet val;
    EmbeddingSet test_in_domain;
    std::optional<EmbeddingSet> test_out_domain;
    ClassTextEmbeddings class_text;
};

// ---------------------------------------------------------------------------
// validation

// Throws ErrorKind::data describing the first violated invariant. When
// n_classes is nonzero every label must lie below it.
inline void validate(const EmbeddingSet& set, std::size_t n_classes = 0) {
    if (set.dim == 0) fail(ErrorKind::data, "embedding set has dim 0");
    if (set.data.size() != set.count() * set.dim)
        fail(ErrorKind::data, "embedding payload size does not match count x dim");
    for (std::size_t i = 0; i < set.count(); ++i) {
        const double n = norm(set.row(i));
        if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTolerance)
            fail(ErrorKind::data, "row " + std::to_string(i) + " has norm " + std::to_string(n) + ", expected 1");
        if (n_classes != 0 && set.labels[i] >= n_classes)
            fail(ErrorKind::data, "row " + std::to_string(i) + " has label " + std::to_string(set.labels[i]) +
                                      " >= n_classes " + std::to_string(n_classes));
    }
}

inline void validate(const ClassTextEmbeddings& text) {
    if (text.dim == 0) fail(ErrorKind::data, "class-text table has dim 0");
    if (text.class_names.empty()) fail(ErrorKind::data, "class-text table has no classes");
    if (text.data.size() != text.n_classes() * text.dim)
        fail(ErrorKind::data, "class-text payload size does not match n_classes x dim");
    for (std::size_t c = 0; c < text.n_classes(); ++c) {
        const double n = norm(text.row(c));
        if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTolerance)
            fail(ErrorKind::data, "class-text row " + std::to_string(c) + " is not unit norm");
    }
}

inline void validate(const DatasetBundle& b) {
    validate(b.class_text);
    const std::size_t k = b.class_text.n_classes();
    auto check = [&](const EmbeddingSet& s, const char* name) {
        if (s.dim != b.class_text.dim)
            fail(ErrorKind::data, std::string(name) + " dim " + std::to_string(s.dim) + " != class-text dim " +
                                      std::to_string(b.class_text.dim));
        validate(s, k);
    };
    check(b.train, "train");
    check(b.val, "val");
    check(b.test_in_domain, "test_in");
    if (b.test_out_domain) check(*b.test_out_domain, "test_out");
}

// ---------------------------------------------------------------------------
// row operations

// Unit-normalizes every row of a row-major n x dim matrix.
template <std::floating_point T>
[[nodiscard]] std::vector<T> normalize_rows(std::span<const T> matrix, std::size_t dim) {
    if (dim == 0 || matrix.size() % dim != 0) fail(ErrorKind::data, "matrix size is not a multiple of dim");
    std::vector<T> out(matrix.begin(), matrix.end());
    for (std::size_t i = 0; i < out.size() / dim; ++i) {
        if (!normalize_in_place(std::span<T>(out.data() + i * dim, dim)))
            fail(ErrorKind::numeric, "cannot normalize zero row " + std::to_string(i));
    }
    return out;
}

inline void renormalize(EmbeddingSet& set) {
    set.data = normalize_rows<float>(set.data, set.dim);
}

inline void renormalize(ClassTextEmbeddings& text) {
    text.data = normalize_rows<float>(text.data, text.dim);
}

[[nodiscard]] inline EmbeddingSet subset(const EmbeddingSet& set, std::span<const std::size_t> indices) {
    EmbeddingSet out;
    out.dim = set.dim;
    out.labels.reserve(indices.size());
    out.data.reserve(indices.size() * set.dim);
    for (auto i : indices) {
        out.labels.push_back(set.labels.at(i));
        auto r = set.row(i);
        out.data.insert(out.data.end(), r.begin(), r.end());
    }
    return out;
}

// Appends the rows of b to a; dims must agree.
[[nodiscard]] inline EmbeddingSet concat(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.count() == 0) return b;
    if (b.count() == 0) return a;
    if (a.dim != b.dim) fail(ErrorKind::data, "cannot concatenate sets of different dim");
    EmbeddingSet out = a;
    out.data.insert(out.data.end(), b.data.begin(), b.data.end());
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

// Seeded disjoint partition into (train, val). Each part keeps source order.
[[nodiscard]] inline std::pair<EmbeddingSet, EmbeddingSet> split_train_val(const EmbeddingSet& set,
                                                                           double val_fraction,
                                                                           std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        fail(ErrorKind::usage, "val_fraction must lie in (0, 1), got " + std::to_string(val_fraction));
    const std::size_t n = set.count();
    if (n < 2) fail(ErrorKind::data, "split_train_val needs at least 2 items");
    auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    shuffle(order, rng);
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {subset(set, train_idx), subset(set, val_idx)};
}

// ---------------------------------------------------------------------------
// little-endian binary io

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    [[nodiscard]] const std::vector<char>& bytes() const noexcept { return bytes_; }

private:
    std::vector<char> bytes_;
};

class ByteReader {
public:
    ByteReader(std::vector<char> bytes, std::string source) : bytes_(std::move(bytes)), source_(std::move(source)) {}

    std::string raw(std::size_t n, const char* what) {
        need(n, what);
        std::string s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
        pos_ += 4;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    void need(std::size_t n, const char* what) const {
        if (remaining() < n)
            fail(ErrorKind::data, source_ + ": truncated while reading " + what + " (need " + std::to_string(n) +
                                      " bytes, have " + std::to_string(remaining()) + ")");
    }
    void expect_end() const {
        if (remaining() != 0)
            fail(ErrorKind::data, source_ + ": " + std::to_string(remaining()) + " trailing bytes after payload");
    }
    [[nodiscard]] const std::string& source() const noexcept { return source_; }

private:
    std::vector<char> bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

inline std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::data, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void dump(const std::filesystem::path& path, const std::vector<char>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::data, "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::data, "write failed for " + path.string());
}

inline void read_header(ByteReader& r, std::string_view magic) {
    const std::string m = r.raw(4, "magic");
    if (m != magic) fail(ErrorKind::data, r.source() + ": bad magic, expected " + std::string(magic));
    const std::uint32_t version = r.u32("version");
    if (version != kFormatVersion)
        fail(ErrorKind::data, r.source() + ": unsupported version " + std::to_string(version));
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xffffffffu) fail(ErrorKind::data, std::string(what) + " does not fit in u32");
    return static_cast<std::uint32_t>(v);
}

}  // namespace detail

[[nodiscard]] inline std::vector<char> encode(const EmbeddingSet& set) {
    detail::ByteWriter w;
    w.raw("RGBX");
    w.u32(kFormatVersion);
    w.u32(detail::checked_u32(set.count(), "count"));
    w.u32(set.dim);
    for (auto l : set.labels) w.u32(l);
    for (float v : set.data) w.f32(v);
    return w.bytes();
}

[[nodiscard]] inline EmbeddingSet decode_embedding_set(std::vector<char> bytes, std::string source = "<memory>") {
    detail::ByteReader r(std::move(bytes), std::move(source));
    detail::read_header(r, "RGBX");
    const std::uint32_t count = r.u32("count");
    EmbeddingSet set;
    set.dim = r.u32("dim");
    // Size check before allocating so a corrupt header cannot request huge buffers.
    r.need(static_cast<std::size_t>(count) * 4u, "labels");
    set.labels.resize(count);
    for (auto& l : set.labels) l = r.u32("labels");
    r.need(static_cast<std::size_t>(count) * set.dim * 4u, "payload");
    set.data.resize(static_cast<std::size_t>(count) * set.dim);
    for (auto& v : set.data) v = r.f32("payload");
    r.expect_end();
    validate(set);
    return set;
}

inline void write_embedding_file(const EmbeddingSet& set, const std::filesystem::path& path) {
    validate(set);
    detail::dump(path, encode(set));
}

[[nodiscard]] inline EmbeddingSet read_embedding_file(const std::filesystem::path& path) {
    return decode_embedding_set(detail::slurp(path), path.string());
}

[[nodiscard]] inline std::vector<char> encode(const ClassTextEmbeddings& text) {
    detail::ByteWriter w;
    w.raw("RGBT");
    w.u32(kFormatVersion);
    w.u32(detail::checked_u32(text.n_classes(), "n_classes"));
    w.u32(text.dim);
    for (const auto& name : text.class_names) {
        w.u32(detail::checked_u32(name.size(), "class name length"));
        w.raw(name);
    }
    for (float v : text.data) w.f32(v);
    return w.bytes();
}

[[nodiscard]] inline ClassTextEmbeddings decode_class_text(std::vector<char> bytes, std::string source = "<memory>") {
    detail::ByteReader r(std::move(bytes), std::move(source));
    detail::read_header(r, "RGBT");
    const std::uint32_t n_classes = r.u32("n_classes");
    ClassTextEmbeddings text;
    text.dim = r.u32("dim");
    r.need(static_cast<std::size_t>(n_classes) * 4u, "class names");
    text.class_names.reserve(n_classes);
    for (std::uint32_t c = 0; c < n_classes; ++c) {
        const std::uint32_t len = r.u32("class name length");
        text.class_names.push_back(r.raw(len, "class name"));
    }
    r.need(static_cast<std::size_t>(n_classes) * text.dim * 4u, "payload");
    text.data.resize(static_cast<std::size_t>(n_classes) * text.dim);
    for (auto& v : text.data) v = r.f32("payload");
    r.expect_end();
    validate(text);
    return text;
}

inline void write_class_text_file(const ClassTextEmbeddings& text, const std::filesystem::path& path) {
    validate(text);
    detail::dump(path, encode(text));
}

[[nodiscard]] inline ClassTextEmbeddings read_class_text_file(const std::filesystem::path& path) {
    return decode_class_text(detail::slurp(path), path.string());
}

// ---------------------------------------------------------------------------
// bundle directories

struct BundlePaths {
    std::filesystem::path train, val, test_in, test_out, class_text;

    static BundlePaths in_directory(const std::filesystem::path& dir) {
        return {dir / "train.rgbx", dir / "val.rgbx", dir / "test_in.rgbx", dir / "test_out.rgbx",
                dir / "classes.rgbt"};
    }
};

// Loads and validates a bundle, then renormalizes every row exactly. A missing
// out-of-domain file is allowed; every other file is required.
[[nodiscard]] inline DatasetBundle load_bundle(const BundlePaths& paths) {
    DatasetBundle b;
    b.class_text = read_class_text_file(paths.class_text);
    b.train = read_embedding_file(paths.train);
    b.val = read_embedding_file(paths.val);
    b.test_in_domain = read_embedding_file(paths.test_in);
    if (!paths.test_out.empty() && std::filesystem::exists(paths.test_out))
        b.test_out_domain = read_embedding_file(paths.test_out);
    validate(b);
    renormalize(b.class_text);
    for (EmbeddingSet* s : {&b.train, &b.val, &b.test_in_domain}) renormalize(*s);
    if (b.test_out_domain) renormalize(*b.test_out_domain);
    return b;
}

inline void write_bundle(const DatasetBundle& b, const BundlePaths& paths) {
    validate(b);
    write_class_text_file(b.class_text, paths.class_text);
    write_embedding_file(b.train, paths.train);
    write_embedding_file(b.val, paths.val);
    write_embedding_file(b.test_in_domain, paths.test_in);
    if (b.test_out_domain)
        write_embedding_file(*b.test_out_domain, paths.test_out);
    else
        std::filesystem::remove(paths.test_out);
}

}  // namespace regibox
