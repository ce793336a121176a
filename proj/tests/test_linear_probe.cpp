#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"

using namespace regibox;

namespace {

ProbeModel<double> text_probe(const ClassTextEmbeddings& t) {
    auto m = make_probe<double>(static_cast<std::uint32_t>(t.n_classes()), t.dim);
    for (std::size_t k = 0; k < t.data.size(); ++k) m.params[k] = t.data[k];
    return m;
}

}  // namespace

TEST_CASE("predict examples") {
    const auto text = testing::basis_text(4, 4);
    const auto p = text_probe(text);
    const auto x = testing::make_set(4, {0.f, 0.f, 1.f, 0.f}, {2});
    CHECK(predict(p, x) == std::vector<std::uint32_t>{2});

    Rng rng(1);
    const auto set = oracle::random_set(50, 4, 4, rng);
    const auto zero = make_probe<double>(4, 4);
    for (auto c : predict(zero, set)) CHECK(c == 0);

    auto random = make_probe<double>(4, 4);
    for (auto& v : random.params) v = rng.normal();
    auto scaled = random;
    for (auto& v : scaled.params) v *= 3.0;
    CHECK(predict(random, set) == predict(scaled, set));
}

TEST_CASE("zero-shot examples") {
    const auto text = testing::basis_text(4, 5);
    CHECK(zero_shot_predict(text, testing::make_set(5, {0.f, 0.f, 0.f, 1.f, 0.f}, {3})) ==
          std::vector<std::uint32_t>{3});
    const float h = static_cast<float>(std::sqrt(0.5));
    CHECK(zero_shot_predict(text, testing::make_set(5, {h, h, 0.f, 0.f, 0.f}, {1})) == std::vector<std::uint32_t>{0});
    CHECK_THROWS_AS(zero_shot_predict(text, testing::make_set(3, {1.f, 0.f, 0.f}, {0})), Error);
}

TEST_CASE("zero-shot equals nearest-mean classification") {
    SyntheticSpec spec;
    spec.dim = 8;
    spec.n_classes = 6;
    spec.spread_sigma = 0.6;
    spec.per_class = 40;
    spec.seed = 4;
    const auto means = class_means(spec);
    const auto set = sample_clusters(spec, means, 9);
    const auto text = class_text_from_means(means, 8);
    const auto pred = zero_shot_predict(text, set);
    for (std::size_t i = 0; i < set.count(); ++i) {
        // nearest mean in Euclidean distance on the sphere = largest inner product
        std::uint32_t best = 0;
        double bd = 1e300;
        for (std::uint32_t c = 0; c < 6; ++c) {
            double dist = 0;
            for (std::size_t j = 0; j < 8; ++j) {
                const double diff = set.row(i)[j] - means[c * 8 + j];
                dist += diff * diff;
            }
            if (dist < bd) {
                bd = dist;
                best = c;
            }
        }
        CHECK(pred[i] == best);
    }
    CHECK(fraction_correct(pred, set.labels) < 1.0);
}

TEST_CASE("probe fits tight orthogonal clusters") {
    SyntheticSpec spec;
    spec.spread_sigma = 0.05;
    spec.per_class = 50;
    spec.seed = 2;
    const auto [set, text] = generate(spec);
    ProbeConfig c;
    c.learning_rate = 1e-2;
    const auto r = train_probe(set, set, 4, c);
    CHECK(fraction_correct(predict(r.model, set), set.labels) == 1.0);
    CHECK(r.train_loss.size() == 100);
}

TEST_CASE("single-class data predicts that class with vanishing loss") {
    EmbeddingSet s;
    s.dim = 3;
    Rng rng(3);
    for (int i = 0; i < 30; ++i) {
        for (double v : testing::unit_gaussian(3, rng)) s.data.push_back(static_cast<float>(v));
        s.labels.push_back(1);
    }
    ProbeConfig c;
    c.learning_rate = 0.05;
    c.weight_decay = 0.0;
    c.epochs = 300;
    const auto r = train_probe(s, EmbeddingSet{}, 3, c);
    for (auto p : predict(r.model, s)) CHECK(p == 1);
    CHECK(r.train_loss.back() < 0.01);
}

TEST_CASE("probe training is deterministic and its loss trends down") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticSpec spec;
        spec.dim = 10;
        spec.n_classes = 5;
        spec.spread_sigma = 0.3;
        spec.per_class = 40;
        spec.seed = seed;
        const auto [set, text] = generate(spec);
        ProbeConfig c;
        c.seed = seed;
        c.batch_size = 32;
        c.learning_rate = 5e-3;
        c.epochs = 30;
        const auto a = train_probe(set, EmbeddingSet{}, 5, c);
        const auto b = train_probe(set, EmbeddingSet{}, 5, c);
        CHECK(a.model == b.model);
        CHECK(a.train_loss == b.train_loss);
        // first third vs last third
        double early = 0, late = 0;
        for (int e = 0; e < 10; ++e) {
            early += a.train_loss[e];
            late += a.train_loss[20 + e];
        }
        CHECK(late < early);
    }
}

TEST_CASE("probe gradient matches central differences") {
    Rng rng(12);
    const auto set = oracle::random_set(20, 4, 3, rng);
    auto m = make_probe<double>(3, 4);
    for (auto& v : m.params) v = rng.normal();
    std::vector<std::size_t> idx(20);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> g;
    detail::probe_loss_and_grad(m, set, idx, &g);
    for (std::size_t k = 0; k < m.params.size(); ++k) {
        const double keep = m.params[k];
        m.params[k] = keep + 1e-5;
        const double up = probe_loss(m, set);
        m.params[k] = keep - 1e-5;
        const double down = probe_loss(m, set);
        m.params[k] = keep;
        CHECK(g[k] == Catch::Approx((up - down) / 2e-5).margin(1e-7));
    }
}

TEST_CASE("early stopping keeps the best validation epoch") {
    SyntheticSpec spec;
    spec.spread_sigma = 0.4;
    spec.per_class = 30;
    spec.seed = 6;
    const auto [set, text] = generate(spec);
    const auto [tr, va] = split_train_val(set, 0.3, 1);
    ProbeConfig c;
    c.epochs = 20;
    c.batch_size = 16;
    const auto r = train_probe(tr, va, 4, c);
    REQUIRE(r.val_accuracy.size() == 20);
    const auto best = *std::max_element(r.val_accuracy.begin(), r.val_accuracy.end());
    CHECK(r.val_accuracy[r.selected_epoch - 1] == best);
    for (std::size_t e = r.selected_epoch; e < 20; ++e) CHECK(r.val_accuracy[e] < best);
    CHECK(fraction_correct(predict(r.model, va), va.labels) == best);

    c.early_stop = false;
    const auto f = train_probe(tr, va, 4, c);
    CHECK(f.model == f.final_model);
    CHECK(f.selected_epoch == 20);
}

TEST_CASE("no-bias probe keeps zero bias") {
    SyntheticSpec spec;
    spec.seed = 1;
    const auto [set, text] = generate(spec);
    ProbeConfig c;
    c.use_bias = false;
    c.epochs = 5;
    const auto r = train_probe(set, EmbeddingSet{}, 4, c);
    for (std::size_t k = 0; k < 4; ++k) CHECK(r.model.bias(k) == 0.0);
}

TEST_CASE("probe rejects bad inputs") {
    const auto s = testing::make_set(2, {1.f, 0.f}, {3});
    CHECK_THROWS_AS(train_probe(s, EmbeddingSet{}, 2, ProbeConfig{}), Error);
    CHECK_THROWS_AS(train_probe(EmbeddingSet{2, {}, {}}, EmbeddingSet{}, 2, ProbeConfig{}), Error);
    ProbeConfig c;
    c.batch_size = 0;
    CHECK_THROWS_AS(train_probe(testing::make_set(2, {1.f, 0.f}, {0}), EmbeddingSet{}, 2, c), Error);
    CHECK_THROWS_AS(predict(make_probe<double>(2, 3), s), Error);
}

TEST_CASE("probe checkpoint round-trip and corruption") {
    const auto dir = testing::scratch("probe_io");
    Rng rng(4);
    auto m = make_probe<double>(3, 5, false);
    for (std::size_t k = 0; k < 15; ++k) m.params[k] = static_cast<float>(rng.normal());
    write_probe_file(m, dir / "p.rgbp");
    CHECK(read_probe_file(dir / "p.rgbp") == m);
    const auto bytes = encode(m);
    CHECK(std::string(bytes.data(), 4) == "RGBP");

    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(decode_probe(bad), Error);
    bad = bytes;
    bad.resize(bytes.size() - 2);
    CHECK_THROWS_AS(decode_probe(bad), Error);
    bad = bytes;
    bad[4] = 0;
    CHECK_THROWS_AS(decode_probe(bad), Error);
    bad = bytes;
    bad.push_back('x');
    CHECK_THROWS_AS(decode_probe(bad), Error);
    bad = bytes;
    bad[16] = 2;  // has_bias must be 0 or 1
    CHECK_THROWS_AS(decode_probe(bad), Error);
}

TEST_CASE("predictions csv") {
    const auto dir = testing::scratch("probe_csv");
    const std::vector<std::uint32_t> labels{0, 1, 2}, preds{0, 2, 2};
    write_predictions_csv(dir / "p.csv", labels, preds);
    std::ifstream in(dir / "p.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "index,label,prediction\n0,0,0\n1,1,2\n2,2,2\n");
    CHECK_THROWS_AS(write_predictions_csv(dir / "q.csv", labels, std::vector<std::uint32_t>{1}), Error);
}
