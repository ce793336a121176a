#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace regibox;

TEST_CASE("zero spread puts every sample on its class mean") {
    SyntheticSpec spec;
    spec.spread_sigma = 0.0;
    spec.per_class = 5;
    spec.seed = 3;
    const auto [set, text] = generate(spec);
    REQUIRE(set.count() == 20);
    for (std::size_t i = 0; i < set.count(); ++i) {
        const auto r = set.row(i);
        const auto m = text.row(set.labels[i]);
        CHECK(std::equal(r.begin(), r.end(), m.begin()));
    }
    CHECK(zero_shot_predict(text, set) == set.labels);
}

TEST_CASE("generation is deterministic per seed") {
    SyntheticSpec spec;
    spec.seed = 9;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    spec.seed = 10;
    CHECK_FALSE(generate(spec).first == a.first);
}

TEST_CASE("orthogonal means need dim >= classes") {
    SyntheticSpec spec;
    spec.dim = 8;
    spec.n_classes = 20;
    CHECK_THROWS_AS(generate(spec), Error);
    spec.orthogonal_means = false;
    CHECK_NOTHROW(generate(spec));
}

TEST_CASE("class means are orthonormal and rows unit norm") {
    SyntheticSpec spec;
    spec.dim = 12;
    spec.n_classes = 12;
    spec.seed = 4;
    const auto m = class_means(spec);
    for (std::size_t a = 0; a < 12; ++a)
        for (std::size_t b = 0; b < 12; ++b) {
            const double d = dot(std::span<const double>(m.data() + a * 12, 12), std::span<const double>(m.data() + b * 12, 12));
            CHECK(d == Catch::Approx(a == b ? 1.0 : 0.0).margin(1e-12));
        }
    const auto [set, text] = generate(spec);
    for (std::size_t i = 0; i < set.count(); ++i) CHECK(norm(set.row(i)) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("invalid specs are usage errors") {
    SyntheticSpec spec;
    spec.spread_sigma = -1.0;
    try {
        (void)generate(spec);
        FAIL("negative sigma accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::usage);
    }
    spec.spread_sigma = 0.1;
    spec.per_class = 0;
    CHECK_THROWS_AS(generate(spec), Error);
    spec.per_class = 3;
    spec.class_sigmas = {0.1, 0.2};
    CHECK_THROWS_AS(generate(spec), Error);
}

TEST_CASE("separable clusters are fit perfectly by a plain probe") {
    SyntheticSpec spec;
    spec.dim = 16;
    spec.n_classes = 4;
    spec.per_class = 100;
    spec.spread_sigma = 0.1;
    spec.seed = 1;
    const auto [set, text] = generate(spec);
    ProbeConfig pc;
    pc.learning_rate = 1e-2;
    pc.epochs = 100;
    pc.early_stop = false;
    const auto trained = train_probe(set, EmbeddingSet{}, 4, pc);
    CHECK(fraction_correct(predict(trained.model, set), set.labels) == 1.0);
    // nearest-mean is perfect here as well
    CHECK(zero_shot_predict(text, set) == set.labels);
}

TEST_CASE("shift_domain examples") {
    const auto set = testing::make_set(2, {1.0f, 0.0f, 0.6f, 0.8f}, {0, 1});
    const std::vector<double> zero{0.0, 0.0};
    CHECK(shift_domain(set, zero) == set);

    // row 0 minus itself is the zero vector
    const std::vector<double> cancel{-1.0, 0.0};
    try {
        (void)shift_domain(set, cancel);
        FAIL("zero row accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numeric);
        CHECK(std::string(e.what()).find("row 0") != std::string::npos);
    }
    // -2*row maps the row to its antipode, which is still a valid direction
    const std::vector<double> flip{-2.0, 0.0};
    CHECK(shift_domain(set, flip).data[0] == -1.0f);

    // magnitude 0.5 along axis 0: off-axis rows turn, on-axis rows do not
    const std::vector<double> axis{0.5, 0.0};
    const auto shifted = shift_domain(set, axis);
    CHECK(dot(set.row(0), shifted.row(0)) == Catch::Approx(1.0));
    CHECK(dot(set.row(1), shifted.row(1)) < 1.0 - 1e-3);
    CHECK(shifted.labels == set.labels);
}

TEST_CASE("synthetic bundle shape") {
    SyntheticBundleSpec bs;
    bs.base.per_class = 50;
    bs.base.seed = 2;
    const auto b = make_synthetic_bundle(bs);
    CHECK(b.train.count() == 160);
    CHECK(b.val.count() == 40);
    CHECK(b.test_in_domain.count() == 200);
    REQUIRE(b.test_out_domain);
    CHECK(b.test_out_domain->count() == 200);
    CHECK_NOTHROW(validate(b));
    bs.shift_magnitude = 0.0;
    CHECK_FALSE(make_synthetic_bundle(bs).test_out_domain);
}
