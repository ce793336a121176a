// Command-line pipeline: synth, stage1, stage2, eval, analyze.
//
// Every subcommand accepts --config FILE, a flat key=value file whose keys are
// the long option names. Precedence is flag > file > default. Each run writes
// <command>.config into its output directory with every resolved value, which
// can be fed back through --config to reproduce the run.
//
// Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric failure.
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "regibox/box_net.hpp"
#include "regibox/core.hpp"
#include "regibox/embedding_store.hpp"
#include "regibox/eval.hpp"
#include "regibox/linear_probe.hpp"
#include "regibox/region_sampler.hpp"
#include "regibox/synthetic.hpp"

namespace regibox::cli {

namespace fs = std::filesystem;

namespace detail {

inline std::string to_text(const std::string& v) { return v; }
inline std::string to_text(bool v) { return v ? "true" : "false"; }
inline std::string to_text(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}
template <std::integral T>
std::string to_text(T v) {
    return std::to_string(v);
}
template <typename T>
std::string to_text(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + to_text(v[i]);
    return s;
}

// Registers options on a subcommand and remembers how to echo their values.
class Options {
public:
    explicit Options(CLI::App* app) : app_(app) {}

    template <typename T>
    CLI::Option* add(const std::string& key, T& value, const std::string& help) {
        echo_.emplace_back(key, [&value] { return to_text(value); });
        auto* opt = app_->add_option("--" + key, value, help)->capture_default_str();
        if constexpr (requires { value.push_back(value.front()); }) opt->delimiter(',');
        return opt;
    }

    CLI::Option* flag(const std::string& key, bool& value, const std::string& help) {
        echo_.emplace_back(key, [&value] { return to_text(value); });
        return app_->add_flag("--" + key, value, help);
    }

    [[nodiscard]] std::string resolved() const {
        std::string s;
        for (const auto& [k, f] : echo_) {
            const auto v = f();
            if (!v.empty()) s += k + "=" + v + "\n";
        }
        return s;
    }

    CLI::App* app() const { return app_; }

private:
    CLI::App* app_;
    std::vector<std::pair<std::string, std::function<std::string()>>> echo_;
};

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Appends --key=value for every config-file entry whose key is not already on
// the command line, so explicit flags win.
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
    fs::path config;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
    }
    if (config.empty()) return args;
    std::ifstream in(config);
    if (!in) fail(ErrorKind::usage, "cannot read config file " + config.string());
    auto given = [&](const std::string& key) {
        return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
        });
    };
    std::vector<std::string> extra;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::usage, config.string() + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "config" || value.empty()) continue;
        if (!given(key)) extra.push_back("--" + key + "=" + value);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::data, "cannot open " + path.string() + " for writing");
    out << text;
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

inline BundlePaths bundle_paths(const fs::path& dir) { return BundlePaths::in_directory(dir); }

inline Protocol parse_protocol(const std::string& text) {
    if (text == "standard") return StandardProtocol{};
    auto parts = std::vector<std::string>{};
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    try {
        if (parts.size() == 2 && parts[0] == "few_shot") {
            const long n = std::stol(parts[1]);
            if (n <= 0) fail(ErrorKind::usage, "few_shot needs a positive count");
            return FewShotProtocol{static_cast<std::uint32_t>(n)};
        }
        if (parts.size() == 3 && parts[0] == "imbalanced") {
            const long n = std::stol(parts[2]);
            if (n < 0) fail(ErrorKind::usage, "imbalanced N must be >= 0");
            return ImbalancedProtocol{std::stod(parts[1]), static_cast<std::uint32_t>(n)};
        }
    } catch (const std::logic_error&) {
        // fall through to the usage error below
    }
    fail(ErrorKind::usage, "unknown protocol '" + text + "' (standard | few_shot:N | imbalanced:X:N)");
}

inline Method parse_method(const std::string& text) {
    if (text == "zero_shot") return Method::zero_shot;
    if (text == "probe") return Method::probe;
    if (text == "lare") return Method::lare;
    fail(ErrorKind::usage, "unknown method '" + text + "' (zero_shot | probe | lare)");
}

inline nlohmann::ordered_json trace_json(const TrainTrace& t) {
    auto rec = [](const EpochRecord& r) {
        nlohmann::ordered_json j;
        j["epoch"] = r.epoch;
        j["total"] = r.total;
        j["box_volume"] = r.box_volume;
        j["cc_average"] = r.cc_average;
        j["train_corner_accuracy"] = r.train_corner_accuracy;
        j["val_corner_accuracy"] =
            r.val_corner_accuracy ? nlohmann::ordered_json(*r.val_corner_accuracy) : nlohmann::ordered_json(nullptr);
        return j;
    };
    nlohmann::ordered_json j;
    j["initial"] = rec(t.initial);
    j["selected_epoch"] = t.selected_epoch;
    auto& arr = j["epochs"] = nlohmann::ordered_json::array();
    for (const auto& r : t.epochs) arr.push_back(rec(r));
    return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// per-command settings

struct SynthArgs {
    std::uint32_t dim = 16;
    std::uint32_t classes = 4;
    std::uint32_t per_class = 100;
    double sigma = 0.1;
    std::vector<double> class_sigmas;
    double val_fraction = 0.2;
    std::uint32_t test_per_class = 50;
    double shift = 0.5;
    std::uint64_t seed = 0;
    bool random_means = false;
    std::string out;
};

struct Stage1Args {
    std::string data;
    std::string out;
    double alpha = 0.5;
    std::uint32_t epochs = 100;
    std::uint32_t batch_size = 512;
    double lr = 1e-3;
    double weight_decay = 1e-2;
    double temperature = 1.0;
    bool raw_midpoint = false;
    std::vector<std::uint32_t> hidden;
    std::string select = "best";
    std::uint64_t seed = 0;
};

struct ProbeArgs {
    std::uint32_t epochs = 100;
    std::uint32_t batch_size = 512;
    double lr = 1e-3;
    double weight_decay = 1e-2;
    bool no_bias = false;
    bool no_early_stop = false;

    [[nodiscard]] ProbeConfig config(std::uint64_t seed) const {
        ProbeConfig c;
        c.epochs = epochs;
        c.batch_size = batch_size;
        c.learning_rate = lr;
        c.weight_decay = weight_decay;
        c.use_bias = !no_bias;
        c.early_stop = !no_early_stop;
        c.seed = seed;
        return c;
    }
};

inline Stage1Config stage1_config(const Stage1Args& a, std::uint64_t seed) {
    Stage1Config c;
    c.loss.alpha = a.alpha;
    c.loss.temperature = a.temperature;
    c.loss.renormalize_midpoint = !a.raw_midpoint;
    c.epochs = a.epochs;
    c.batch_size = a.batch_size;
    c.learning_rate = a.lr;
    c.weight_decay = a.weight_decay;
    c.hidden = a.hidden;
    c.seed = seed;
    return c;
}

namespace detail {

inline void add_stage1_options(Options& o, Stage1Args& a) {
    o.add("alpha", a.alpha, "loss mix: (1-alpha)*volume + alpha*class consistency")->check(CLI::Range(0.0, 1.0));
    o.add("epochs", a.epochs, "box-net training epochs")->check(CLI::PositiveNumber);
    o.add("batch-size", a.batch_size, "box-net mini-batch size")->check(CLI::PositiveNumber);
    o.add("lr", a.lr, "box-net learning rate")->check(CLI::PositiveNumber);
    o.add("weight-decay", a.weight_decay, "box-net decoupled weight decay")->check(CLI::NonNegativeNumber);
    o.add("temperature", a.temperature, "logit temperature for class consistency")->check(CLI::PositiveNumber);
    o.flag("raw-midpoint", a.raw_midpoint, "score the unnormalized box midpoint");
    o.add("hidden", a.hidden, "hidden layer widths, comma separated (default: one layer of width d)");
    o.add("select", a.select, "checkpoint to keep: best (validation) or final")
        ->check(CLI::IsMember({"best", "final"}));
}

inline void add_probe_options(Options& o, ProbeArgs& a) {
    o.add("probe-epochs", a.epochs, "probe training epochs")->check(CLI::PositiveNumber);
    o.add("probe-batch-size", a.batch_size, "probe mini-batch size")->check(CLI::PositiveNumber);
    o.add("probe-lr", a.lr, "probe learning rate")->check(CLI::PositiveNumber);
    o.add("probe-weight-decay", a.weight_decay, "probe decoupled weight decay")->check(CLI::NonNegativeNumber);
    o.flag("no-bias", a.no_bias, "train the probe without a bias term");
    o.flag("no-early-stop", a.no_early_stop, "keep the final probe instead of the best-validation one");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// commands

inline void cmd_synth(const SynthArgs& a, const std::string& resolved, std::ostream& log) {
    SyntheticBundleSpec bs;
    bs.base.dim = a.dim;
    bs.base.n_classes = a.classes;
    bs.base.per_class = a.per_class;
    bs.base.spread_sigma = a.sigma;
    bs.base.class_sigmas = a.class_sigmas;
    bs.base.seed = a.seed;
    bs.base.orthogonal_means = !a.random_means;
    bs.val_fraction = a.val_fraction;
    bs.test_per_class = a.test_per_class;
    bs.shift_magnitude = a.shift;
    if (a.per_class < 2) fail(ErrorKind::usage, "per-class must be >= 2 so train and val are both nonempty");
    const auto bundle = make_synthetic_bundle(bs);
    const fs::path out(a.out);
    write_bundle(bundle, detail::bundle_paths(out));
    detail::write_text(out / "synth.config", resolved);
    log << "wrote " << bundle.train.count() << " train, " << bundle.val.count() << " val, "
        << bundle.test_in_domain.count() << " test_in"
        << (bundle.test_out_domain ? ", " + std::to_string(bundle.test_out_domain->count()) + " test_out" : "")
        << " rows to " << out.string() << "\n";
}

inline void cmd_stage1(const Stage1Args& a, const std::string& resolved, std::ostream& log) {
    const auto bundle = load_bundle(detail::bundle_paths(a.data));
    const auto result =
        train_stage1(bundle.train, bundle.val, bundle.class_text, stage1_config(a, derive_seed(a.seed, "stage1")));
    const fs::path out(a.out);
    write_box_net_file(a.select == "final" ? result.final_model : result.model, out / "boxnet.rgbm");
    auto trace = detail::trace_json(result.trace);
    trace["checkpoint"] = a.select;
    detail::write_json(out / "stage1_trace.json", trace);
    detail::write_text(out / "stage1.config", resolved);
    const auto& last = result.trace.epochs.back();
    log << "stage1: " << result.trace.epochs.size() << " epochs, loss " << result.trace.initial.total << " -> "
        << last.total << ", corner accuracy " << last.train_corner_accuracy << ", selected epoch "
        << (a.select == "final" ? last.epoch : result.trace.selected_epoch) << "\n";
}

struct Stage2Args {
    std::string data;
    std::string model;
    std::string out;
    std::uint32_t samples = 5;
    std::uint64_t seed = 0;
    ProbeArgs probe;
};

inline void cmd_stage2(const Stage2Args& a, const std::string& resolved, std::ostream& log) {
    if (!fs::exists(a.model)) fail(ErrorKind::data, "box-net checkpoint not found: " + a.model);
    const auto bundle = load_bundle(detail::bundle_paths(a.data));
    const auto model = read_box_net_file(a.model);
    AugmentationConfig ac;
    ac.samples_per_image = a.samples;
    ac.seed = derive_seed(a.seed, "augment");
    const auto aug = augment_dataset(bundle.train, model, ac);
    const auto k = static_cast<std::uint32_t>(bundle.class_text.n_classes());
    const auto trained = train_probe(aug.set, bundle.val, k, a.probe.config(derive_seed(a.seed, "probe")));

    const fs::path out(a.out);
    write_embedding_file(aug.set, out / "augmented.rgbx");
    detail::write_json(out / "augmented.json", augmentation_manifest(aug, ac, bundle.train.count()));
    write_probe_file(trained.model, out / "probe.rgbp");
    nlohmann::ordered_json trace;
    trace["selected_epoch"] = trained.selected_epoch;
    trace["train_loss"] = trained.train_loss;
    trace["val_accuracy"] = trained.val_accuracy;
    detail::write_json(out / "stage2_trace.json", trace);
    detail::write_text(out / "stage2.config", resolved);
    log << "stage2: augmented " << bundle.train.count() << " -> " << aug.set.count() << " rows, probe epoch "
        << trained.selected_epoch << "\n";
}

struct EvalArgs {
    std::string data;
    std::string out;
    std::string method = "probe";
    std::string probe_path;
    std::string protocol = "standard";
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::uint32_t samples = 5;
    Stage1Args stage1;
    ProbeArgs probe;
};

inline void cmd_eval(const EvalArgs& a, const std::string& resolved, std::ostream& log) {
    const auto bundle = load_bundle(detail::bundle_paths(a.data));
    const auto method = detail::parse_method(a.method);
    const fs::path out(a.out);
    const EmbeddingSet* test_out = bundle.test_out_domain ? &*bundle.test_out_domain : nullptr;

    EvalReport report;
    if (method == Method::zero_shot || !a.probe_path.empty()) {
        // Fixed classifier: one evaluation, predictions exported.
        std::optional<ProbeModel<double>> probe;
        if (method != Method::zero_shot) {
            if (!fs::exists(a.probe_path)) fail(ErrorKind::data, "probe checkpoint not found: " + a.probe_path);
            probe = read_probe_file(a.probe_path);
        }
        auto classify = [&](const EmbeddingSet& s) {
            return probe ? predict(*probe, s) : zero_shot_predict(bundle.class_text, s);
        };
        const auto pin = classify(bundle.test_in_domain);
        std::vector<std::uint32_t> pout;
        if (test_out) pout = classify(*test_out);
        write_predictions_csv(out / "predictions_in.csv", bundle.test_in_domain.labels, pin);
        if (test_out) write_predictions_csv(out / "predictions_out.csv", test_out->labels, pout);
        report = summarize(a.method, "fixed",
                           {score(0, pin, bundle.test_in_domain, test_out ? pout.data() : nullptr, test_out)});
    } else {
        if (a.seeds.empty()) fail(ErrorKind::usage, "at least one seed is required");
        Recipe recipe;
        recipe.stage1 = stage1_config(a.stage1, 0);
        recipe.augmentation.samples_per_image = a.samples;
        recipe.probe = a.probe.config(0);
        report = run_protocol(bundle, detail::parse_protocol(a.protocol), method, a.seeds, recipe);
    }
    detail::write_json(out / "report.json", to_json(report));
    write_report_csv(report, out / "report.csv");
    detail::write_text(out / "eval.config", resolved);
    log << "eval " << report.method << " (" << report.protocol << "): in " << report.in_domain.mean;
    if (report.out_domain) log << ", out " << report.out_domain->mean;
    log << ", extended " << report.extended.mean << "\n";
}

struct AnalyzeArgs {
    std::string data;
    std::string model;
    std::string out;
    std::string set = "train";
    double epsilon = kDefaultLogVolumeEpsilon;
    std::vector<std::uint32_t> dims;  // empty: every dimension
};

inline void cmd_analyze(const AnalyzeArgs& a, const std::string& resolved, std::ostream& log) {
    if (!fs::exists(a.model)) fail(ErrorKind::data, "box-net checkpoint not found: " + a.model);
    const auto bundle = load_bundle(detail::bundle_paths(a.data));
    const auto model = read_box_net_file(a.model);
    const EmbeddingSet* set = nullptr;
    if (a.set == "train") set = &bundle.train;
    if (a.set == "val") set = &bundle.val;
    if (a.set == "test_in") set = &bundle.test_in_domain;
    if (a.set == "test_out") {
        if (!bundle.test_out_domain) fail(ErrorKind::data, "bundle has no test_out set");
        set = &*bundle.test_out_domain;
    }
    const auto k = static_cast<std::uint32_t>(bundle.class_text.n_classes());
    const auto stats = region_stats(model, *set, k, a.epsilon);

    const fs::path out(a.out);
    const auto volume = rank_classes_by_volume(stats);
    for (auto c : volume.skipped_classes)
        log << "warning: class " << bundle.class_text.class_names[c] << " has no images in " << a.set << "\n";
    write_ranking_csv(volume, bundle.class_text, out / "volume_ranking.csv");

    std::vector<std::uint32_t> dims = a.dims;
    if (dims.empty())
        for (std::uint32_t j = 0; j < stats.dim; ++j) dims.push_back(j);
    std::ostringstream csv;
    csv << "dimension,rank,class_name,statistic\n";
    for (auto j : dims) {
        const auto r = rank_classes_by_dimension(stats, j);
        for (std::size_t i = 0; i < r.entries.size(); ++i)
            csv << j << ',' << i + 1 << ',' << regibox::detail::csv_field(bundle.class_text.class_names[r.entries[i].class_index])
                << ',' << regibox::detail::fmt_double(r.entries[i].statistic) << '\n';
    }
    detail::write_text(out / "side_length_ranking.csv", csv.str());
    detail::write_text(out / "analyze.config", resolved);
    log << "analyze: ranked " << volume.entries.size() << " classes over " << dims.size() << " dimensions\n";
}

// ---------------------------------------------------------------------------
// entry point

// args excludes the program name.
inline int run(std::vector<std::string> args, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"regibox: latent-region augmentation for linear probes on vision-language embeddings"};
    app.require_subcommand(1);
    std::string config;
    auto add_config = [&](CLI::App* sub) { sub->add_option("--config", config, "flat key=value config file"); };

    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "generate a synthetic embedding bundle");
    detail::Options o_synth(s_synth);
    add_config(s_synth);
    o_synth.add("dim", synth.dim, "embedding dimension")->check(CLI::PositiveNumber);
    o_synth.add("classes", synth.classes, "number of classes")->check(CLI::PositiveNumber);
    o_synth.add("per-class", synth.per_class, "train+val samples per class")->check(CLI::PositiveNumber);
    o_synth.add("sigma", synth.sigma, "per-class Gaussian spread")->check(CLI::NonNegativeNumber);
    o_synth.add("class-sigmas", synth.class_sigmas, "per-class spreads, comma separated (overrides --sigma)");
    o_synth.add("val-fraction", synth.val_fraction, "validation share of the train pool")
        ->check(CLI::Range(0.0, 1.0));
    o_synth.add("test-per-class", synth.test_per_class, "test samples per class and domain")
        ->check(CLI::PositiveNumber);
    o_synth.add("shift", synth.shift, "magnitude of the out-of-domain shift (0 disables test_out)")
        ->check(CLI::NonNegativeNumber);
    o_synth.add("seed", synth.seed, "root seed");
    o_synth.flag("random-means", synth.random_means, "draw class means without orthogonalization");
    o_synth.add("out", synth.out, "output directory")->required();

    Stage1Args s1;
    auto* s_stage1 = app.add_subcommand("stage1", "train the box network");
    detail::Options o_stage1(s_stage1);
    add_config(s_stage1);
    o_stage1.add("data", s1.data, "bundle directory")->required();
    o_stage1.add("out", s1.out, "output directory")->required();
    o_stage1.add("seed", s1.seed, "root seed");
    detail::add_stage1_options(o_stage1, s1);

    Stage2Args s2;
    auto* s_stage2 = app.add_subcommand("stage2", "augment from boxes and train the probe");
    detail::Options o_stage2(s_stage2);
    add_config(s_stage2);
    o_stage2.add("data", s2.data, "bundle directory")->required();
    o_stage2.add("model", s2.model, "box-net checkpoint (.rgbm)")->required();
    o_stage2.add("out", s2.out, "output directory")->required();
    o_stage2.add("samples", s2.samples, "augmented samples per image");
    o_stage2.add("seed", s2.seed, "root seed");
    detail::add_probe_options(o_stage2, s2.probe);

    EvalArgs ev;
    auto* s_eval = app.add_subcommand("eval", "evaluate zero-shot, a probe checkpoint, or a protocol over seeds");
    detail::Options o_eval(s_eval);
    add_config(s_eval);
    o_eval.add("data", ev.data, "bundle directory")->required();
    o_eval.add("out", ev.out, "output directory")->required();
    o_eval.add("method", ev.method, "zero_shot | probe | lare")->check(CLI::IsMember({"zero_shot", "probe", "lare"}));
    o_eval.add("probe", ev.probe_path, "evaluate this probe checkpoint instead of training per seed");
    o_eval.add("protocol", ev.protocol, "standard | few_shot:N | imbalanced:X:N");
    o_eval.add("seeds", ev.seeds, "run seeds, comma separated");
    o_eval.add("samples", ev.samples, "augmented samples per image (lare)");
    detail::add_stage1_options(o_eval, ev.stage1);
    detail::add_probe_options(o_eval, ev.probe);

    AnalyzeArgs an;
    auto* s_analyze = app.add_subcommand("analyze", "rank classes by region size and side length");
    detail::Options o_analyze(s_analyze);
    add_config(s_analyze);
    o_analyze.add("data", an.data, "bundle directory")->required();
    o_analyze.add("model", an.model, "box-net checkpoint (.rgbm)")->required();
    o_analyze.add("out", an.out, "output directory")->required();
    o_analyze.add("set", an.set, "which split to analyze")
        ->check(CLI::IsMember({"train", "val", "test_in", "test_out"}));
    o_analyze.add("epsilon", an.epsilon, "side-length clamp for log-volume")->check(CLI::PositiveNumber);
    o_analyze.add("dims", an.dims, "dimensions for side-length ranking, comma separated (default: all)");

    try {
        args = detail::merge_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
        if (s_synth->parsed()) cmd_synth(synth, o_synth.resolved(), log);
        if (s_stage1->parsed()) cmd_stage1(s1, o_stage1.resolved(), log);
        if (s_stage2->parsed()) cmd_stage2(s2, o_stage2.resolved(), log);
        if (s_eval->parsed()) cmd_eval(ev, o_eval.resolved(), log);
        if (s_analyze->parsed()) cmd_analyze(an, o_analyze.resolved(), log);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, log, err);
        return rc == 0 ? 0 : static_cast<int>(ErrorKind::usage);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::data);
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::data);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::numeric);
    }
    return 0;
}

}  // namespace regibox::cli
