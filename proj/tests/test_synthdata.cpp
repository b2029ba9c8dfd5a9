#include "helpers.hpp"

#include "sigsel/error.hpp"
#include "sigsel/evaluation.hpp"
#include "sigsel/selectors.hpp"
#include "sigsel/synthdata.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace sigsel;

TEST_CASE("default synthetic dataset shape and validity") {
    SynthConfig cfg;
    const auto synth = generate_synthetic(cfg);
    const auto &ds = synth.dataset;
    CHECK(ds.rows() == 600);
    CHECK(ds.cols() == 1280);
    CHECK(ds.n_classes() == 20);
    CHECK(ds.class_names.front() == "signer_000");
    CHECK(ds.features.minCoeff() == 0.0f);
    CHECK(synth.informative_columns.size() == 64);
    CHECK(std::is_sorted(synth.informative_columns.begin(), synth.informative_columns.end()));
    const auto report = validate_dataset(ds);
    CHECK(report.valid());
    CHECK(report.balanced);
    CHECK(report.chi2_eligible);
}

TEST_CASE("synthetic generation is a pure function of the config") {
    SynthConfig cfg;
    cfg.p = 100;
    cfg.informative = 10;
    CHECK(generate_synthetic(cfg).dataset == generate_synthetic(cfg).dataset);
    auto other = cfg;
    other.seed = 8;
    CHECK_FALSE(generate_synthetic(other).dataset == generate_synthetic(cfg).dataset);
}

TEST_CASE("class means keep the requested separation") {
    SynthConfig cfg;
    cfg.n_classes = 6;
    cfg.per_class = 200;
    cfg.p = 30;
    cfg.informative = 5;
    cfg.separation = 6.0;
    const auto synth = generate_synthetic(cfg);
    const Matrix x = synth.dataset.features.cast<double>();
    std::vector<Vector> means(6, Vector::Zero(30));
    for (Eigen::Index i = 0; i < x.rows(); ++i) means[static_cast<std::size_t>(synth.dataset.labels[static_cast<std::size_t>(i)])] += x.row(i).transpose() / 200.0;
    for (std::size_t a = 0; a < 6; ++a) {
        for (std::size_t b = a + 1; b < 6; ++b) {
            Vector d = means[a] - means[b];
            double informative = 0.0;
            for (int c : synth.informative_columns) informative += d[c] * d[c];
            // Sample means carry noise of roughly sqrt(2/200) per column.
            CHECK(std::sqrt(informative) > 6.0 - 1.0);
        }
    }
}

TEST_CASE("without signal, classification stays at chance") {
    SynthConfig cfg;
    cfg.n_classes = 4;
    cfg.per_class = 50;
    cfg.p = 20;
    cfg.informative = 0;
    cfg.separation = 0.0;
    const auto ds = generate_synthetic(cfg).dataset;
    const auto plan = make_stratified_folds(ds.labels, 5, 11);
    ClassifierConfig knn;
    knn.family = Family::knn;
    double acc = 0.0;
    for (int f = 0; f < 5; ++f) acc += run_pipeline_fold(ds, plan, f, std::nullopt, 0, knn).metrics.accuracy / 5.0;
    const double sd = std::sqrt(0.25 * 0.75 / 200.0);
    CHECK(std::abs(acc - 0.25) < 3 * sd);
}

TEST_CASE("selectors recover informative columns on a small instance") {
    SynthConfig cfg;
    cfg.n_classes = 5;
    cfg.per_class = 20;
    cfg.p = 200;
    cfg.informative = 10;
    cfg.separation = 6.0;
    const auto synth = generate_synthetic(cfg);
    const Matrix raw = synth.dataset.features.cast<double>();
    const Matrix z = Standardizer::fit(raw).transform(raw);
    for (auto method : {SelectorMethod::chi2, SelectorMethod::mi, SelectorMethod::nca}) {
        const auto scores = method == SelectorMethod::chi2 ? chi2_scores(raw, synth.dataset.labels)
                            : method == SelectorMethod::mi ? mi_scores(z, synth.dataset.labels)
                                                           : nca_fit(z, synth.dataset.labels);
        const auto top = select_top_k(scores, 10).indices();
        std::vector<int> hit;
        std::set_intersection(top.begin(), top.end(), synth.informative_columns.begin(),
                              synth.informative_columns.end(), std::back_inserter(hit));
        INFO(to_string(method));
        CHECK(hit.size() >= 8);
    }
}

TEST_CASE("unrealizable configs are rejected") {
    SynthConfig cfg;
    cfg.informative = 2000;
    CHECK_THROWS_AS(generate_synthetic(cfg), argument_error);
    cfg = {};
    cfg.per_class = 0;
    CHECK_THROWS_AS(generate_synthetic(cfg), argument_error);
    cfg = {};
    cfg.informative = 0;
    CHECK_THROWS_AS(generate_synthetic(cfg), argument_error);
}
