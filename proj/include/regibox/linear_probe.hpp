// Linear softmax probe over frozen embeddings, plus the zero-shot classifier.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regibox/core.hpp"
#include "regibox/embedding_store.hpp"
#include "regibox/optim.hpp"

namespace regibox {

// Flat parameters: n_classes x dim weights (row-major) followed by n_classes biases.
template <std::floating_point Real = double>
struct ProbeModel {
    std::uint32_t n_classes = 0;
    std::uint32_t dim = 0;
    bool has_bias = true;
    std::vector<Real> params;

    [[nodiscard]] std::span<const Real> weights(std::size_t c) const { return {params.data() + c * dim, dim}; }
    [[nodiscard]] Real bias(std::size_t c) const { return params[std::size_t{n_classes} * dim + c]; }

    bool operator==(const ProbeModel&) const = default;
};

template <std::floating_point Real = double>
[[nodiscard]] ProbeModel<Real> make_probe(std::uint32_t n_classes, std::uint32_t dim, bool has_bias = true) {
    if (n_classes == 0 || dim == 0) fail(ErrorKind::usage, "probe needs positive n_classes and dim");
    ProbeModel<Real> m;
    m.n_classes = n_classes;
    m.dim = dim;
    m.has_bias = has_bias;
    m.params.assign(std::size_t{n_classes} * (dim + 1), Real{0});
    return m;
}

template <std::floating_point Real>
void validate(const ProbeModel<Real>& m) {
    if (m.n_classes == 0 || m.dim == 0) fail(ErrorKind::data, "probe has empty shape");
    if (m.params.size() != std::size_t{m.n_classes} * (m.dim + 1))
        fail(ErrorKind::data, "probe parameter count does not match its shape");
    if (!all_finite(std::span<const Real>(m.params))) fail(ErrorKind::numeric, "probe has non-finite parameters");
}

namespace detail {

template <std::floating_point Real, typename In>
void probe_logits(const ProbeModel<Real>& m, std::span<const In> x, std::vector<double>& logits) {
    logits.resize(m.n_classes);
    for (std::size_t c = 0; c < m.n_classes; ++c) {
        const auto w = m.weights(c);
        double s = static_cast<double>(m.bias(c));
        for (std::size_t j = 0; j < m.dim; ++j) s += static_cast<double>(w[j]) * static_cast<double>(x[j]);
        logits[c] = s;
    }
}

// First maximum wins, so ties go to the lower class index.
inline std::uint32_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < v.size(); ++c)
        if (v[c] > v[best]) best = c;
    return static_cast<std::uint32_t>(best);
}

}  // namespace detail

template <std::floating_point Real>
[[nodiscard]] std::vector<std::uint32_t> predict(const ProbeModel<Real>& model, const EmbeddingSet& set) {
    validate(model);
    if (set.dim != model.dim) fail(ErrorKind::data, "probe dim does not match embedding set");
    std::vector<std::uint32_t> out(set.count());
    parallel_chunks(set.count(), 256, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> logits;
        for (std::size_t i = begin; i < end; ++i) {
            detail::probe_logits(model, set.row(i), logits);
            out[i] = detail::argmax(logits);
        }
    });
    return out;
}

[[nodiscard]] inline std::vector<std::uint32_t> zero_shot_predict(const ClassTextEmbeddings& text,
                                                                  const EmbeddingSet& set) {
    if (set.dim != text.dim) fail(ErrorKind::data, "class-text dim does not match embedding set");
    std::vector<std::uint32_t> out(set.count());
    std::vector<double> sims(text.n_classes());
    for (std::size_t i = 0; i < set.count(); ++i) {
        const auto x = set.row(i);
        const double nx = norm(x);
        for (std::size_t c = 0; c < text.n_classes(); ++c) {
            const double nt = norm(text.row(c));
            sims[c] = dot(x, text.row(c)) / (nx * nt);
        }
        out[i] = detail::argmax(sims);
    }
    return out;
}

struct ProbeConfig {
    std::uint32_t epochs = 100;
    std::uint32_t batch_size = 512;
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    std::uint64_t seed = 0;
    bool early_stop = true;  // keep the best-validation checkpoint
    bool use_bias = true;
};

inline void validate(const ProbeConfig& c) {
    if (c.epochs < 1) fail(ErrorKind::usage, "probe epochs must be >= 1");
    if (c.batch_size < 1) fail(ErrorKind::usage, "probe batch_size must be >= 1");
    if (!(c.learning_rate > 0.0)) fail(ErrorKind::usage, "probe learning_rate must be positive");
    if (!(c.weight_decay >= 0.0)) fail(ErrorKind::usage, "probe weight_decay must be >= 0");
}

struct ProbeTraining {
    ProbeModel<double> model;        // selected checkpoint
    ProbeModel<double> final_model;  // after the last epoch
    std::vector<double> train_loss;  // mean cross-entropy over the data after each epoch
    std::vector<double> val_accuracy;
    std::uint32_t selected_epoch = 0;
};

namespace detail {

// Mean softmax cross-entropy over the rows in [begin, end) of idx; adds the
// gradient of the batch mean (scaled by inv_n) into grad when non-empty.
template <std::floating_point Real>
double probe_ce(const ProbeModel<Real>& m, const EmbeddingSet& data, std::span<const std::size_t> idx,
                std::span<double> grad, double inv_n) {
    std::vector<double> logits;
    double total = 0.0;
    const std::size_t bias_off = std::size_t{m.n_classes} * m.dim;
    for (auto i : idx) {
        const auto x = data.row(i);
        const auto y = data.labels[i];
        probe_logits(m, x, logits);
        const double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double l : logits) sum += std::exp(l - mx);
        total += mx + std::log(sum) - logits[y];
        if (grad.empty()) continue;
        for (std::size_t c = 0; c < m.n_classes; ++c) {
            const double g = (std::exp(logits[c] - mx) / sum - (c == y ? 1.0 : 0.0)) * inv_n;
            double* gw = grad.data() + c * m.dim;
            for (std::size_t j = 0; j < m.dim; ++j) gw[j] += g * static_cast<double>(x[j]);
            if (m.has_bias) grad[bias_off + c] += g;
        }
    }
    return total;
}

template <std::floating_point Real>
double probe_loss_and_grad(const ProbeModel<Real>& m, const EmbeddingSet& data, std::span<const std::size_t> idx,
                           std::vector<double>* grad) {
    constexpr std::size_t chunk = 128;
    const std::size_t chunks = chunk_count(idx.size(), chunk);
    std::vector<double> losses(chunks, 0.0);
    std::vector<std::vector<double>> grads(grad ? chunks : 0);
    const double inv_n = 1.0 / static_cast<double>(idx.size());
    parallel_chunks(idx.size(), chunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::span<double> g;
        if (grad) {
            grads[c].assign(m.params.size(), 0.0);
            g = grads[c];
        }
        losses[c] = probe_ce(m, data, idx.subspan(begin, end - begin), g, inv_n);
    });
    if (grad) {
        grad->assign(m.params.size(), 0.0);
        for (const auto& g : grads)
            for (std::size_t k = 0; k < g.size(); ++k) (*grad)[k] += g[k];
    }
    double total = 0.0;
    for (double l : losses) total += l;
    return total * inv_n;
}

}  // namespace detail

// Mean softmax cross-entropy of the probe over a whole set.
template <std::floating_point Real>
[[nodiscard]] double probe_loss(const ProbeModel<Real>& model, const EmbeddingSet& data) {
    std::vector<std::size_t> idx(data.count());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return detail::probe_loss_and_grad(model, data, idx, nullptr);
}

[[nodiscard]] inline double fraction_correct(std::span<const std::uint32_t> preds,
                                             std::span<const std::uint32_t> labels) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] == labels[i] ? 1 : 0;
    return preds.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(preds.size());
}

// Mini-batch AdamW on mean cross-entropy, zero-initialized. With early_stop
// and a nonempty val set, the returned model is the epoch with the best
// validation accuracy (latest epoch on ties).
[[nodiscard]] inline ProbeTraining train_probe(const EmbeddingSet& data, const EmbeddingSet& val,
                                               std::uint32_t n_classes, const ProbeConfig& config) {
    validate(config);
    if (data.count() == 0) fail(ErrorKind::data, "empty probe training set");
    if (val.count() > 0 && val.dim != data.dim) fail(ErrorKind::data, "validation dim does not match training dim");
    for (auto l : data.labels)
        if (l >= n_classes) fail(ErrorKind::data, "label " + std::to_string(l) + " >= n_classes");

    auto model = make_probe<double>(n_classes, data.dim, config.use_bias);
    AdamW<double> opt(model.params.size(), {config.learning_rate, config.weight_decay});
    Rng rng(derive_seed(config.seed, "probe.shuffle"));

    ProbeTraining out;
    out.model = model;
    double best = -1.0;
    std::vector<std::size_t> order(data.count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad;
    for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            detail::probe_loss_and_grad(model, data, std::span<const std::size_t>(order.data() + begin, end - begin),
                                        &grad);
            opt.step(model.params, grad);
        }
        out.train_loss.push_back(probe_loss(model, data));
        if (config.early_stop && val.count() > 0) {
            const double acc = fraction_correct(predict(model, val), val.labels);
            out.val_accuracy.push_back(acc);
            if (acc >= best) {
                best = acc;
                out.model = model;
                out.selected_epoch = epoch;
            }
        }
    }
    if (!config.early_stop || val.count() == 0) {
        out.model = model;
        out.selected_epoch = config.epochs;
    }
    out.final_model = std::move(model);
    return out;
}

// ---------------------------------------------------------------------------
// checkpoint: "RGBP" | u32 version | u32 n_classes | u32 dim | u32 has_bias |
//             n_classes*dim x f32 weights | n_classes x f32 bias

template <std::floating_point Real>
[[nodiscard]] std::vector<char> encode(const ProbeModel<Real>& m) {
    validate(m);
    detail::ByteWriter w;
    w.raw("RGBP");
    w.u32(kFormatVersion);
    w.u32(m.n_classes);
    w.u32(m.dim);
    w.u32(m.has_bias ? 1u : 0u);
    for (auto p : m.params) w.f32(static_cast<float>(p));
    return w.bytes();
}

template <std::floating_point Real = double>
[[nodiscard]] ProbeModel<Real> decode_probe(std::vector<char> bytes, std::string source = "<memory>") {
    detail::ByteReader r(std::move(bytes), std::move(source));
    detail::read_header(r, "RGBP");
    ProbeModel<Real> m;
    m.n_classes = r.u32("n_classes");
    m.dim = r.u32("dim");
    const std::uint32_t bias_flag = r.u32("bias flag");
    if (bias_flag > 1) fail(ErrorKind::data, r.source() + ": bad bias flag");
    m.has_bias = bias_flag == 1;
    const std::size_t n = std::size_t{m.n_classes} * (std::size_t{m.dim} + 1);
    r.need(n * 4u, "parameters");
    m.params.resize(n);
    for (auto& p : m.params) p = static_cast<Real>(r.f32("parameters"));
    r.expect_end();
    validate(m);
    return m;
}

template <std::floating_point Real>
void write_probe_file(const ProbeModel<Real>& m, const std::filesystem::path& path) {
    detail::dump(path, encode(m));
}

template <std::floating_point Real = double>
[[nodiscard]] ProbeModel<Real> read_probe_file(const std::filesystem::path& path) {
    return decode_probe<Real>(detail::slurp(path), path.string());
}

// CSV with header index,label,prediction.
inline void write_predictions_csv(const std::filesystem::path& path, std::span<const std::uint32_t> labels,
                                  std::span<const std::uint32_t> preds) {
    if (labels.size() != preds.size()) fail(ErrorKind::data, "labels and predictions differ in length");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::data, "cannot open " + path.string() + " for writing");
    out << "index,label,prediction\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << ',' << preds[i] << '\n';
}

}  // namespace regibox
