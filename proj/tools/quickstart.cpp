// Whole pipeline in memory: synthetic bundle, box net, augmented probe, evaluation.
#include <cstdio>

#include "regibox/regibox.hpp"

int main() {
    using namespace regibox;

    SyntheticBundleSpec spec;
    spec.base.dim = 16;
    spec.base.n_classes = 5;
    spec.base.per_class = 40;
    spec.base.spread_sigma = 0.2;
    spec.base.seed = 11;
    spec.shift_magnitude = 0.5;
    const auto bundle = make_synthetic_bundle(spec);

    Stage1Config s1;
    s1.loss.alpha = 0.9;
    s1.learning_rate = 1e-2;
    s1.epochs = 30;
    s1.seed = 11;
    const auto boxes = train_stage1(bundle.train, bundle.val, bundle.class_text, s1);
    std::printf("stage 1: loss %.4f -> %.4f, selected epoch %u\n", boxes.trace.initial.total,
                boxes.trace.epochs.back().total, boxes.trace.selected_epoch);

    AugmentationConfig aug;
    aug.samples_per_image = 5;
    aug.seed = 11;
    const auto augmented = augment_dataset(bundle.train, boxes.model, aug);

    ProbeConfig pc;
    pc.learning_rate = 1e-2;
    pc.epochs = 100;
    pc.seed = 11;
    const auto probe = train_probe(augmented.set, bundle.val, static_cast<std::uint32_t>(bundle.class_text.n_classes()), pc);

    const auto in = predict(probe.model, bundle.test_in_domain);
    const auto out = predict(probe.model, *bundle.test_out_domain);
    std::printf("probe on %zu rows: in-domain %.4f, out-of-domain %.4f\n", augmented.set.count(),
                accuracy(in, bundle.test_in_domain.labels), accuracy(out, bundle.test_out_domain->labels));

    const auto zs = zero_shot_predict(bundle.class_text, bundle.test_in_domain);
    std::printf("zero-shot in-domain %.4f\n", accuracy(zs, bundle.test_in_domain.labels));

    const auto stats = region_stats(boxes.model, bundle.train, static_cast<std::uint32_t>(bundle.class_text.n_classes()));
    for (std::size_t c = 0; c < stats.n_classes; ++c)
        std::printf("class %zu mean log-volume %.3f\n", c, stats.class_mean_log_volume[c]);
    return 0;
}
