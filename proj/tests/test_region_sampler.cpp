#include <catch_amalgamated.hpp>

#include <map>

#include "oracles.hpp"
#include "support.hpp"

using namespace regibox;

namespace {

LatentBox<double> random_box(std::size_t d, Rng& rng) {
    std::vector<double> a(d), b(d);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    return corners_from_raw(a, b);
}

// Model that maps every input x to corners (x, x): a zero-width box at x.
BoxNetModel<double> degenerate_model(std::uint32_t d) {
    BoxNetModel<double> m;
    m.layer_dims = {d, 2 * d};
    m.hidden_activation = Activation::identity;
    m.params.assign(2ull * d * d + 2ull * d, 0.0);
    for (std::uint32_t r = 0; r < 2 * d; ++r) m.params[r * d + r % d] = 1.0;
    return m;
}

}  // namespace

TEST_CASE("zero-width box yields its point") {
    const LatentBox<double> box{{0.6, 0.8}, {0.6, 0.8}};
    for (const auto& s : sample_from_box(box, 5, 3)) {
        CHECK(s[0] == Catch::Approx(0.6).epsilon(1e-15));
        CHECK(s[1] == Catch::Approx(0.8).epsilon(1e-15));
    }
    CHECK(sample_from_box(box, 0, 3).empty());
}

TEST_CASE("raw samples never leave their box") {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const auto box = random_box(7, rng);
        for (const auto& s : sample_from_box(box, 100, rng(), false))
            for (std::size_t j = 0; j < 7; ++j) {
                REQUIRE(s[j] >= box.lower[j]);
                REQUIRE(s[j] <= box.upper[j]);
            }
    }
}

TEST_CASE("renormalized samples are unit and on the raw sample ray") {
    Rng rng(2);
    const auto box = random_box(5, rng);
    const auto raw = sample_from_box(box, 20, 9, false);
    const auto unit = sample_from_box(box, 20, 9, true);
    for (std::size_t k = 0; k < 20; ++k) {
        CHECK(norm(std::span<const double>(unit[k])) == Catch::Approx(1.0).epsilon(1e-12));
        CHECK(dot(std::span<const double>(raw[k]), std::span<const double>(unit[k])) ==
              Catch::Approx(norm(std::span<const double>(raw[k]))).epsilon(1e-12));
    }
}

TEST_CASE("coordinates are uniform across the side") {
    const LatentBox<double> box{{-0.5, 0.2}, {0.5, 0.4}};
    const auto s = sample_from_box(box, 20000, 4, false);
    double m0 = 0, m1 = 0, lowq = 0;
    for (const auto& p : s) {
        m0 += p[0];
        m1 += p[1];
        lowq += p[0] < -0.25 ? 1 : 0;
    }
    CHECK(m0 / 20000 == Catch::Approx(0.0).margin(0.01));
    CHECK(m1 / 20000 == Catch::Approx(0.3).margin(0.002));
    CHECK(lowq / 20000 == Catch::Approx(0.25).margin(0.01));
}

TEST_CASE("box through the origin that only yields zero is an error") {
    const LatentBox<double> box{{0.0, 0.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(sample_from_box(box, 1, 1), Error);
    const LatentBox<double> inverted{{0.5, 0.0}, {0.1, 1.0}};
    CHECK_THROWS_AS(sample_from_box(inverted, 1, 1), Error);
}

TEST_CASE("augment_dataset counts, labels and order") {
    Rng rng(5);
    const auto train = oracle::random_set(100, 6, 4, rng);
    const auto model = make_box_net<double>({6, 6, 12}, Activation::softplus, 3);
    AugmentationConfig c;
    c.samples_per_image = 3;
    c.seed = 8;
    const auto aug = augment_dataset(train, model, c);
    REQUIRE(aug.set.count() == 400);
    std::map<std::uint32_t, int> before, after;
    for (auto l : train.labels) before[l] += 4;
    for (auto l : aug.set.labels) after[l]++;
    CHECK(before == after);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(aug.source_index[i] == i);
        CHECK(std::equal(train.row(i).begin(), train.row(i).end(), aug.set.row(i).begin()));
    }
    for (std::size_t r = 100; r < 400; ++r) {
        const auto src = aug.source_index[r];
        CHECK(src == (r - 100) / 3);
        CHECK(aug.set.labels[r] == train.labels[src]);
        CHECK(norm(aug.set.row(r)) == Catch::Approx(1.0).margin(1e-6));
    }
    CHECK_NOTHROW(validate(aug.set, 4));

    c.samples_per_image = 0;
    CHECK(augment_dataset(train, model, c).set == train);
}

TEST_CASE("augment_dataset is deterministic and thread-count independent") {
    Rng rng(6);
    const auto train = oracle::random_set(70, 5, 3, rng);
    const auto model = make_box_net<double>({5, 5, 10}, Activation::softplus, 3);
    AugmentationConfig c;
    c.seed = 2;
    setenv("REGIBOX_THREADS", "1", 1);
    const auto a = augment_dataset(train, model, c);
    setenv("REGIBOX_THREADS", "3", 1);
    const auto b = augment_dataset(train, model, c);
    unsetenv("REGIBOX_THREADS");
    CHECK(a.set == b.set);
    c.seed = 3;
    CHECK_FALSE(augment_dataset(train, model, c).set == a.set);
}

TEST_CASE("zero-width boxes duplicate their sources") {
    Rng rng(7);
    const auto train = oracle::random_set(10, 4, 2, rng);
    AugmentationConfig c;
    c.samples_per_image = 2;
    const auto aug = augment_dataset(train, degenerate_model(4), c);
    REQUIRE(aug.set.count() == 30);
    for (std::size_t r = 10; r < 30; ++r) {
        const auto src = train.row(aug.source_index[r]);
        const auto row = aug.set.row(r);
        for (std::size_t j = 0; j < 4; ++j) CHECK(row[j] == Catch::Approx(src[j]).margin(1e-7));
    }
}

TEST_CASE("manifest records config and sources") {
    Rng rng(8);
    const auto train = oracle::random_set(4, 3, 2, rng);
    AugmentationConfig c;
    c.samples_per_image = 1;
    c.seed = 77;
    const auto aug = augment_dataset(train, make_box_net<double>({3, 3, 6}, Activation::softplus, 1), c);
    const auto j = augmentation_manifest(aug, c, train.count());
    CHECK(j["count"] == 8);
    CHECK(j["original_count"] == 4);
    CHECK(j["seed"] == 77);
    CHECK(j["source_indices"].get<std::vector<std::uint32_t>>() == aug.source_index);
}

TEST_CASE("augmented samples keep the class after stage 1 on separable data") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticBundleSpec bs;
        bs.base.per_class = 100;
        bs.base.seed = seed;
        const auto b = make_synthetic_bundle(bs);
        Stage1Config sc;
        sc.loss.alpha = 0.9;
        sc.learning_rate = 1e-2;
        sc.epochs = 40;
        sc.batch_size = 64;
        sc.seed = seed;
        const auto s1 = train_stage1(b.train, b.val, b.class_text, sc);
        AugmentationConfig ac;
        ac.seed = seed;
        const auto aug = augment_dataset(b.train, s1.model, ac);
        const auto pred = zero_shot_predict(b.class_text, aug.set);
        std::size_t ok = 0, n = 0;
        for (std::size_t r = b.train.count(); r < aug.set.count(); ++r, ++n) ok += pred[r] == aug.set.labels[r];
        CHECK(static_cast<double>(ok) / static_cast<double>(n) >= 0.9);
    }
}
