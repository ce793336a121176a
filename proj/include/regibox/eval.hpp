// Accuracy metrics, experiment protocols and region statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "regibox/box_net.hpp"
#include "regibox/core.hpp"
#include "regibox/embedding_store.hpp"
#include "regibox/linear_probe.hpp"
#include "regibox/region_sampler.hpp"

namespace regibox {

// ---------------------------------------------------------------------------
// accuracy

[[nodiscard]] inline double accuracy(std::span<const std::uint32_t> preds, std::span<const std::uint32_t> labels) {
    if (preds.size() != labels.size()) fail(ErrorKind::data, "predictions and labels differ in length");
    if (preds.empty()) fail(ErrorKind::data, "accuracy of an empty set");
    return fraction_correct(preds, labels);
}

struct DomainCount {
    std::size_t correct = 0;
    std::size_t total = 0;
};

// Pooled accuracy over several domains: sum(correct) / sum(total).
[[nodiscard]] inline double extended_accuracy(std::span<const DomainCount> per_domain) {
    if (per_domain.empty()) fail(ErrorKind::data, "extended accuracy needs at least one domain");
    std::size_t c = 0;
    std::size_t t = 0;
    for (const auto& d : per_domain) {
        if (d.total == 0) fail(ErrorKind::data, "domain with zero items");
        if (d.correct > d.total) fail(ErrorKind::data, "domain with more correct than total");
        c += d.correct;
        t += d.total;
    }
    return static_cast<double>(c) / static_cast<double>(t);
}

[[nodiscard]] inline DomainCount count_correct(std::span<const std::uint32_t> preds,
                                               std::span<const std::uint32_t> labels) {
    if (preds.size() != labels.size()) fail(ErrorKind::data, "predictions and labels differ in length");
    DomainCount d;
    d.total = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i) d.correct += preds[i] == labels[i] ? 1 : 0;
    return d;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single value
};

[[nodiscard]] inline MeanStd mean_std(std::span<const double> v) {
    MeanStd r;
    if (v.empty()) return r;
    double s = 0.0;
    for (double x : v) s += x;
    r.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return r;
}

// Spearman rank correlation with average ranks for ties.
[[nodiscard]] inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::data, "spearman needs two equal-length samples");
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const auto mx = mean_std(rx).mean;
    const auto my = mean_std(ry).mean;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// region statistics

inline constexpr double kDefaultLogVolumeEpsilon = 1e-12;

struct RegionStats {
    std::uint32_t dim = 0;
    std::uint32_t n_classes = 0;
    std::vector<double> log_volume;  // per image: sum_j ln(max(side_j, eps))
    std::vector<double> sides;       // per image, row-major n x dim
    std::vector<std::uint32_t> labels;
    std::vector<std::size_t> class_count;
    std::vector<double> class_mean_log_volume;  // NaN for classes without images
    std::vector<double> class_mean_sides;       // n_classes x dim, NaN rows for empty classes
};

[[nodiscard]] inline double log_volume(std::span<const double> sides, double epsilon = kDefaultLogVolumeEpsilon) {
    double s = 0.0;
    for (double side : sides) s += std::log(std::max(side, epsilon));
    return s;
}

// Aggregates per-image sides into class means. sides is n x dim.
[[nodiscard]] inline RegionStats region_stats_from_sides(std::vector<double> sides, std::vector<std::uint32_t> labels,
                                                         std::uint32_t dim, std::uint32_t n_classes,
                                                         double epsilon = kDefaultLogVolumeEpsilon) {
    if (!(epsilon > 0.0)) fail(ErrorKind::usage, "epsilon must be positive");
    if (sides.size() != labels.size() * dim) fail(ErrorKind::data, "sides and labels disagree in count");
    RegionStats st;
    st.dim = dim;
    st.n_classes = n_classes;
    st.sides = std::move(sides);
    st.labels = std::move(labels);
    const std::size_t n = st.labels.size();
    st.log_volume.resize(n);
    st.class_count.assign(n_classes, 0);
    st.class_mean_log_volume.assign(n_classes, 0.0);
    st.class_mean_sides.assign(std::size_t{n_classes} * dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = st.labels[i];
        if (c >= n_classes) fail(ErrorKind::data, "label out of range in region statistics");
        std::span<const double> s(st.sides.data() + i * dim, dim);
        st.log_volume[i] = log_volume(s, epsilon);
        ++st.class_count[c];
        st.class_mean_log_volume[c] += st.log_volume[i];
        for (std::size_t j = 0; j < dim; ++j) st.class_mean_sides[c * dim + j] += s[j];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double cnt = static_cast<double>(st.class_count[c]);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        st.class_mean_log_volume[c] = cnt > 0 ? st.class_mean_log_volume[c] / cnt : nan;
        for (std::size_t j = 0; j < dim; ++j) {
            auto& v = st.class_mean_sides[c * dim + j];
            v = cnt > 0 ? v / cnt : nan;
        }
    }
    return st;
}

template <std::floating_point Real>
[[nodiscard]] RegionStats region_stats(const BoxNetModel<Real>& model, const EmbeddingSet& set,
                                       std::uint32_t n_classes, double epsilon = kDefaultLogVolumeEpsilon) {
    if (set.dim != model.dim()) fail(ErrorKind::data, "embedding set dim does not match box net");
    const std::size_t d = set.dim;
    std::vector<double> sides(set.count() * d);
    parallel_chunks(set.count(), 64, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto box = box_of(model, set.row(i));
            for (std::size_t j = 0; j < d; ++j) sides[i * d + j] = box.upper[j] - box.lower[j];
        }
    });
    return region_stats_from_sides(std::move(sides), set.labels, set.dim, n_classes, epsilon);
}

struct RankEntry {
    std::uint32_t class_index = 0;
    double statistic = 0.0;
};

struct Ranking {
    std::vector<RankEntry> entries;             // best first
    std::vector<std::uint32_t> skipped_classes;  // classes without images
};

namespace detail {

inline Ranking rank_descending(std::span<const double> stat, std::span<const std::size_t> counts) {
    Ranking r;
    for (std::size_t c = 0; c < stat.size(); ++c) {
        if (counts[c] == 0)
            r.skipped_classes.push_back(static_cast<std::uint32_t>(c));
        else
            r.entries.push_back({static_cast<std::uint32_t>(c), stat[c]});
    }
    std::stable_sort(r.entries.begin(), r.entries.end(),
                     [](const RankEntry& a, const RankEntry& b) { return a.statistic > b.statistic; });
    return r;
}

}  // namespace detail

// Descending mean log-volume; ties keep class-index order.
[[nodiscard]] inline Ranking rank_classes_by_volume(const RegionStats& st) {
    return detail::rank_descending(st.class_mean_log_volume, st.class_count);
}

// Descending mean side length in one dimension; ties keep class-index order.
[[nodiscard]] inline Ranking rank_classes_by_dimension(const RegionStats& st, std::uint32_t dim_index) {
    if (dim_index >= st.dim)
        fail(ErrorKind::usage, "dimension " + std::to_string(dim_index) + " out of range (dim " +
                                   std::to_string(st.dim) + ")");
    std::vector<double> stat(st.n_classes);
    for (std::size_t c = 0; c < st.n_classes; ++c) stat[c] = st.class_mean_sides[c * st.dim + dim_index];
    return detail::rank_descending(stat, st.class_count);
}

// ---------------------------------------------------------------------------
// protocols

struct StandardProtocol {};
struct FewShotProtocol {
    std::uint32_t per_class = 0;
};
struct ImbalancedProtocol {
    double percent_classes = 0.0;  // X, in percent
    std::uint32_t reduced_to = 0;  // N
};
using Protocol = std::variant<StandardProtocol, FewShotProtocol, ImbalancedProtocol>;

enum class Method : std::uint8_t { zero_shot, probe, lare };

[[nodiscard]] inline std::string to_string(Method m) {
    switch (m) {
        case Method::zero_shot: return "zero_shot";
        case Method::probe: return "probe";
        case Method::lare: return "lare";
    }
    return "unknown";
}

[[nodiscard]] inline std::string to_string(const Protocol& p) {
    if (std::holds_alternative<FewShotProtocol>(p))
        return "few_shot:" + std::to_string(std::get<FewShotProtocol>(p).per_class);
    if (std::holds_alternative<ImbalancedProtocol>(p)) {
        const auto& ip = std::get<ImbalancedProtocol>(p);
        std::ostringstream os;
        os << "imbalanced:" << ip.percent_classes << ':' << ip.reduced_to;
        return os.str();
    }
    return "standard";
}

// Training hyperparameters for every stage of a protocol run. Per-seed
// component seeds are derived from the run seed, overriding the seeds here.
struct Recipe {
    Stage1Config stage1;
    AugmentationConfig augmentation;
    ProbeConfig probe;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> indices_by_class(const EmbeddingSet& set, std::uint32_t n_classes) {
    std::vector<std::vector<std::size_t>> by(n_classes);
    for (std::size_t i = 0; i < set.count(); ++i) by.at(set.labels[i]).push_back(i);
    return by;
}

inline EmbeddingSet take_per_class(const EmbeddingSet& set, const std::vector<std::uint32_t>& quota,
                                   std::uint64_t seed) {
    auto by = indices_by_class(set, static_cast<std::uint32_t>(quota.size()));
    Rng rng(seed);
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < by.size(); ++c) {
        if (quota[c] > by[c].size())
            fail(ErrorKind::usage, "class " + std::to_string(c) + " has " + std::to_string(by[c].size()) +
                                       " training items, protocol asks for " + std::to_string(quota[c]));
        shuffle(by[c], rng);
        keep.insert(keep.end(), by[c].begin(), by[c].begin() + quota[c]);
    }
    std::sort(keep.begin(), keep.end());
    return subset(set, keep);
}

}  // namespace detail

// Training subset for a protocol. Few-shot keeps n per class; imbalanced
// reduces a seeded random X% of classes to N items and keeps the rest whole.
[[nodiscard]] inline EmbeddingSet apply_protocol(const EmbeddingSet& train, std::uint32_t n_classes,
                                                 const Protocol& protocol, std::uint64_t seed) {
    if (std::holds_alternative<StandardProtocol>(protocol)) return train;
    const auto by = detail::indices_by_class(train, n_classes);
    std::vector<std::uint32_t> quota(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) quota[c] = static_cast<std::uint32_t>(by[c].size());

    if (const auto* fs = std::get_if<FewShotProtocol>(&protocol)) {
        for (auto& q : quota) q = fs->per_class;
    } else {
        const auto& ip = std::get<ImbalancedProtocol>(protocol);
        if (!(ip.percent_classes >= 0.0 && ip.percent_classes <= 100.0))
            fail(ErrorKind::usage, "imbalanced percentage must lie in [0, 100]");
        const auto n_reduced =
            static_cast<std::size_t>(std::llround(ip.percent_classes / 100.0 * static_cast<double>(n_classes)));
        if (n_reduced == 0) return train;
        std::vector<std::uint32_t> classes(n_classes);
        std::iota(classes.begin(), classes.end(), 0u);
        Rng rng(derive_seed(seed, "protocol.classes"));
        shuffle(classes, rng);
        for (std::size_t k = 0; k < n_reduced; ++k) quota[classes[k]] = ip.reduced_to;
    }
    return detail::take_per_class(train, quota, derive_seed(seed, "protocol.items"));
}

struct SeedResult {
    std::uint64_t seed = 0;
    DomainCount in_domain;
    std::optional<DomainCount> out_domain;
    double in_accuracy = 0.0;
    std::optional<double> out_accuracy;
    double extended_accuracy = 0.0;
    std::size_t train_count = 0;  // items the classifier was trained on
};

struct EvalReport {
    std::string method;
    std::string protocol;
    std::vector<SeedResult> seeds;
    MeanStd in_domain;
    std::optional<MeanStd> out_domain;
    MeanStd extended;
};

[[nodiscard]] inline EvalReport summarize(std::string method, std::string protocol, std::vector<SeedResult> seeds) {
    EvalReport r;
    r.method = std::move(method);
    r.protocol = std::move(protocol);
    r.seeds = std::move(seeds);
    std::vector<double> in, out, ext;
    for (const auto& s : r.seeds) {
        in.push_back(s.in_accuracy);
        ext.push_back(s.extended_accuracy);
        if (s.out_accuracy) out.push_back(*s.out_accuracy);
    }
    r.in_domain = mean_std(in);
    r.extended = mean_std(ext);
    if (!out.empty()) r.out_domain = mean_std(out);
    return r;
}

// Scores one set of predictions on the in-domain and optional out-of-domain test sets.
[[nodiscard]] inline SeedResult score(std::uint64_t seed, std::span<const std::uint32_t> pred_in,
                                      const EmbeddingSet& test_in, const std::uint32_t* pred_out,
                                      const EmbeddingSet* test_out) {
    SeedResult r;
    r.seed = seed;
    r.in_domain = count_correct(pred_in, test_in.labels);
    r.in_accuracy = accuracy(pred_in, test_in.labels);
    std::vector<DomainCount> domains{r.in_domain};
    if (test_out != nullptr) {
        const std::span<const std::uint32_t> po(pred_out, test_out->count());
        r.out_domain = count_correct(po, test_out->labels);
        r.out_accuracy = accuracy(po, test_out->labels);
        domains.push_back(*r.out_domain);
    }
    r.extended_accuracy = extended_accuracy(domains);
    return r;
}

// Trains the method on the protocol's training subset for one seed and
// returns the probe (no probe for zero-shot).
[[nodiscard]] inline std::optional<ProbeModel<double>> fit_method(const DatasetBundle& bundle, const Protocol& protocol,
                                                                  Method method, std::uint64_t seed,
                                                                  const Recipe& recipe, std::size_t* train_count = nullptr) {
    const auto k = static_cast<std::uint32_t>(bundle.class_text.n_classes());
    const auto train = apply_protocol(bundle.train, k, protocol, derive_seed(seed, "protocol"));
    if (train_count) *train_count = train.count();
    if (method == Method::zero_shot) return std::nullopt;

    ProbeConfig pc = recipe.probe;
    pc.seed = derive_seed(seed, "probe");
    if (method == Method::probe) return train_probe(train, bundle.val, k, pc).model;

    Stage1Config s1 = recipe.stage1;
    s1.seed = derive_seed(seed, "stage1");
    const auto stage1 = train_stage1(train, bundle.val, bundle.class_text, s1);
    AugmentationConfig ac = recipe.augmentation;
    ac.seed = derive_seed(seed, "augment");
    const auto aug = augment_dataset(train, stage1.model, ac);
    if (train_count) *train_count = aug.set.count();
    return train_probe(aug.set, bundle.val, k, pc).model;
}

[[nodiscard]] inline EvalReport run_protocol(const DatasetBundle& bundle, const Protocol& protocol, Method method,
                                             std::span<const std::uint64_t> seeds, const Recipe& recipe = {}) {
    if (seeds.empty()) fail(ErrorKind::usage, "run_protocol needs at least one seed");
    validate(bundle);
    const EmbeddingSet* out_set = bundle.test_out_domain ? &*bundle.test_out_domain : nullptr;
    std::vector<SeedResult> results;
    for (auto seed : seeds) {
        std::size_t n_train = 0;
        const auto probe = fit_method(bundle, protocol, method, seed, recipe, &n_train);
        auto classify = [&](const EmbeddingSet& s) {
            return probe ? predict(*probe, s) : zero_shot_predict(bundle.class_text, s);
        };
        const auto pin = classify(bundle.test_in_domain);
        std::vector<std::uint32_t> pout;
        if (out_set) pout = classify(*out_set);
        auto r = score(seed, pin, bundle.test_in_domain, out_set ? pout.data() : nullptr, out_set);
        r.train_count = n_train;
        results.push_back(r);
    }
    return summarize(to_string(method), to_string(protocol), std::move(results));
}

// ---------------------------------------------------------------------------
// report output

[[nodiscard]] inline nlohmann::ordered_json to_json(const MeanStd& m) {
    return {{"mean", m.mean}, {"std", m.std}};
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["method"] = r.method;
    j["protocol"] = r.protocol;
    j["in_domain"] = to_json(r.in_domain);
    j["out_of_domain"] = r.out_domain ? to_json(*r.out_domain) : nlohmann::ordered_json(nullptr);
    j["extended"] = to_json(r.extended);
    auto& per = j["per_seed"] = nlohmann::ordered_json::array();
    for (const auto& s : r.seeds) {
        nlohmann::ordered_json e;
        e["seed"] = s.seed;
        e["train_count"] = s.train_count;
        e["in_domain"] = s.in_accuracy;
        e["in_domain_correct"] = s.in_domain.correct;
        e["in_domain_total"] = s.in_domain.total;
        e["out_of_domain"] = s.out_accuracy ? nlohmann::ordered_json(*s.out_accuracy) : nlohmann::ordered_json(nullptr);
        e["out_of_domain_correct"] =
            s.out_domain ? nlohmann::ordered_json(s.out_domain->correct) : nlohmann::ordered_json(nullptr);
        e["out_of_domain_total"] =
            s.out_domain ? nlohmann::ordered_json(s.out_domain->total) : nlohmann::ordered_json(nullptr);
        e["extended"] = s.extended_accuracy;
        per.push_back(std::move(e));
    }
    return j;
}

namespace detail {

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::data, "cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace detail

// CSV: one row per seed, then mean and std rows. Empty cells mean "no out-of-domain set".
inline void write_report_csv(const EvalReport& r, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    auto opt = [](const std::optional<double>& v) { return v ? detail::fmt_double(*v) : std::string(); };
    out << "row,method,protocol,in_domain,out_of_domain,extended\n";
    for (const auto& s : r.seeds)
        out << "seed:" << s.seed << ',' << r.method << ',' << r.protocol << ',' << detail::fmt_double(s.in_accuracy)
            << ',' << opt(s.out_accuracy) << ',' << detail::fmt_double(s.extended_accuracy) << '\n';
    std::optional<double> om, os;
    if (r.out_domain) {
        om = r.out_domain->mean;
        os = r.out_domain->std;
    }
    out << "mean," << r.method << ',' << r.protocol << ',' << detail::fmt_double(r.in_domain.mean) << ',' << opt(om)
        << ',' << detail::fmt_double(r.extended.mean) << '\n';
    out << "std," << r.method << ',' << r.protocol << ',' << detail::fmt_double(r.in_domain.std) << ',' << opt(os)
        << ',' << detail::fmt_double(r.extended.std) << '\n';
}

// CSV rank,class_name,statistic (rank starts at 1).
inline void write_ranking_csv(const Ranking& ranking, const ClassTextEmbeddings& text,
                              const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "rank,class_name,statistic\n";
    for (std::size_t r = 0; r < ranking.entries.size(); ++r) {
        const auto& e = ranking.entries[r];
        out << r + 1 << ',' << detail::csv_field(text.class_names.at(e.class_index)) << ',' << detail::fmt_double(e.statistic) << '\n';
    }
}

}  // namespace regibox
