#include "helpers.hpp"

#include "sigsel/error.hpp"
#include "sigsel/evaluation.hpp"
#include "sigsel/grid.hpp"
#include "sigsel/synthdata.hpp"

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <set>

using namespace sigsel;

namespace {

SynthDataset small_synth(std::uint64_t seed = 3) {
    SynthConfig cfg;
    cfg.n_classes = 4;
    cfg.per_class = 10;
    cfg.p = 40;
    cfg.informative = 8;
    cfg.separation = 5.0;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

GridConfig small_grid() {
    GridConfig cfg;
    cfg.k_values = {5, 10, 15, 20};
    cfg.pipeline.nca.max_iters = 20;
    return cfg;
}

}  // namespace

TEST_CASE("stratified folds: 30 rows per class give 6 per class and fold") {
    const Labels y = testing::balanced_labels(7, 30);
    const auto plan = make_stratified_folds(y, 5, 42);
    for (int c = 0; c < 7; ++c) {
        for (int f = 0; f < 5; ++f) {
            int count = 0;
            for (std::size_t i = 0; i < y.size(); ++i) count += y[i] == c && plan.fold_of[i] == f;
            CHECK(count == 6);
        }
    }
    CHECK(make_stratified_folds(y, 5, 42).fold_of == plan.fold_of);
    CHECK(make_stratified_folds(y, 5, 43).fold_of != plan.fold_of);
}

TEST_CASE("stratified folds partition the rows") {
    Rng rng(6);
    Labels y;
    for (int c = 0; c < 5; ++c) {
        for (std::size_t i = 0; i < 5 + rng.below(9); ++i) y.push_back(c);
    }
    const auto plan = make_stratified_folds(y, 5, 1);
    std::vector<int> seen(y.size(), 0);
    for (int f = 0; f < 5; ++f) {
        const auto test = plan.test_rows(f);
        const auto train = plan.train_rows(f);
        CHECK(test.size() + train.size() == y.size());
        for (int i : test) ++seen[static_cast<std::size_t>(i)];
        std::vector<int> both;
        std::set_intersection(test.begin(), test.end(), train.begin(), train.end(), std::back_inserter(both));
        CHECK(both.empty());
        // Per-class sizes differ by at most one between folds.
        for (int c = 0; c < 5; ++c) {
            const auto per_class = std::count_if(test.begin(), test.end(), [&](int i) { return y[static_cast<std::size_t>(i)] == c; });
            const auto total = std::count(y.begin(), y.end(), c);
            CHECK(per_class >= total / 5);
            CHECK(per_class <= total / 5 + 1);
        }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST_CASE("a class smaller than the fold count is rejected") {
    Labels y = testing::balanced_labels(2, 6);
    y.insert(y.end(), {2, 2, 2, 2});
    CHECK_THROWS_AS(make_stratified_folds(y, 5, 0), argument_error);
    CHECK_THROWS_AS(make_stratified_folds(y, 1, 0), argument_error);
}

TEST_CASE("confusion matrix on a hand example") {
    const auto cm = confusion_matrix({0, 0, 1, 2}, {0, 1, 1, 2}, 3);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 1) == 1);
    CHECK(cm.at(2, 2) == 1);
    CHECK(cm.total() == 4);
    CHECK(cm.trace() == 3);
    CHECK(cm.row_sum(0) == 2);
    CHECK(cm.col_sum(1) == 2);
    CHECK_THROWS_AS(confusion_matrix({0, 1}, {0}, 2), argument_error);
    CHECK_THROWS_AS(confusion_matrix({0, 3}, {0, 1}, 2), argument_error);
}

TEST_CASE("metrics on a hand confusion matrix") {
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 8;
    cm.at(0, 1) = 2;
    cm.at(1, 0) = 1;
    cm.at(1, 1) = 9;
    const auto m = compute_metrics(cm);
    CHECK(m.accuracy == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(m.precision == doctest::Approx(0.5 * 8.0 / 9.0 + 0.5 * 9.0 / 11.0).epsilon(1e-15));
    CHECK(m.recall == doctest::Approx(0.85).epsilon(1e-15));
    const double f0 = 16.0 / 19.0;
    const double f1 = 18.0 / 21.0;
    CHECK(m.f1 == doctest::Approx(0.5 * f0 + 0.5 * f1).epsilon(1e-15));

    const auto macro = compute_metrics(cm, Averaging::macro);
    CHECK(macro.recall == doctest::Approx(0.5 * 0.8 + 0.5 * 0.9).epsilon(1e-15));
    CHECK_THROWS_AS(compute_metrics(ConfusionMatrix(3)), argument_error);
}

TEST_CASE("macro averaging skips classes absent from truth and predictions") {
    const auto cm = confusion_matrix({0, 0, 1, 1}, {0, 0, 1, 0}, 4);
    const auto m = compute_metrics(cm, Averaging::macro);
    CHECK(m.recall == doctest::Approx(0.5 * (1.0 + 0.5)).epsilon(1e-15));
    CHECK(m.precision == doctest::Approx(0.5 * (2.0 / 3.0 + 1.0)).epsilon(1e-15));
}

TEST_CASE("weighted recall equals accuracy on random confusion matrices") {
    Rng rng(1000);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = 2 + rng.below(9);
        ConfusionMatrix cm(n);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) cm.at(a, b) = static_cast<long>(rng.below(a == b ? 40 : 8));
        }
        cm.at(0, 0) += 1;
        const auto m = compute_metrics(cm);
        CHECK(std::abs(m.recall - m.accuracy) < 1e-12);
        CHECK(m.precision >= 0.0);
        CHECK(m.f1 <= 1.0);
    }
}

TEST_CASE("standardizer uses the population deviation and maps constant columns by 1") {
    const Matrix x = testing::to_matrix({{1, 5}, {3, 5}});
    const auto s = Standardizer::fit(x);
    CHECK(s.mean[0] == 2.0);
    CHECK(s.scale[0] == 1.0);
    CHECK(s.scale[1] == 1.0);
    const Matrix z = s.transform(x);
    CHECK(z(0, 0) == -1.0);
    CHECK(z(1, 1) == 0.0);
}

TEST_CASE("preprocessing never looks at held-out rows") {
    const auto synth = small_synth();
    const auto plan = make_stratified_folds(synth.dataset.labels, 5, 9);
    for (auto selector : {SelectorChoice{}, SelectorChoice{SelectorMethod::chi2}, SelectorChoice{SelectorMethod::mi},
                          SelectorChoice{SelectorMethod::nca}}) {
        const auto base = fit_fold_preprocessing(synth.dataset, plan, 2, selector, 10, {});
        auto corrupted = synth.dataset;
        for (int i : plan.test_rows(2)) {
            corrupted.features.row(i).setConstant(1e6f);
        }
        const auto after = fit_fold_preprocessing(corrupted, plan, 2, selector, 10, {});
        INFO(to_string(selector));
        CHECK(after.standardizer == base.standardizer);
        CHECK(after.mask == base.mask);
    }
}

TEST_CASE("single-fold pipeline") {
    SynthConfig sc;
    sc.p = 160;
    const auto synth = generate_synthetic(sc);
    const auto plan = make_stratified_folds(synth.dataset.labels, 5, 1);
    ClassifierConfig linear;
    linear.family = Family::svm_linear;
    const auto none = run_pipeline_fold(synth.dataset, plan, 0, std::nullopt, 0, linear);
    CHECK(none.selector == "none");
    CHECK(none.k == 160);
    CHECK(none.metrics.accuracy >= 0.95);

    const auto all = run_pipeline_fold(synth.dataset, plan, 0, SelectorMethod::nca, 160, linear);
    CHECK(all.metrics.accuracy == none.metrics.accuracy);
    CHECK(all.metrics.f1 == none.metrics.f1);
    CHECK_THROWS_AS(run_pipeline_fold(synth.dataset, plan, 0, SelectorMethod::mi, 161, linear), argument_error);
}

TEST_CASE("mean row lies within the fold extremes") {
    std::vector<MetricRow> rows;
    Rng rng(2);
    for (int f = 0; f < 5; ++f) {
        MetricRow r{"chi2", 10, Family::knn, f, {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()}};
        rows.push_back(r);
    }
    const auto mean = mean_row(rows);
    CHECK(mean.fold == -1);
    double lo = 1.0;
    double hi = 0.0;
    for (const auto &r : rows) {
        lo = std::min(lo, r.metrics.accuracy);
        hi = std::max(hi, r.metrics.accuracy);
    }
    CHECK(mean.metrics.accuracy >= lo);
    CHECK(mean.metrics.accuracy <= hi);
}

TEST_CASE("grid: 91 cells, order, parallel and resumed runs agree") {
    const auto synth = small_synth();
    auto cfg = small_grid();
    GridStats stats;
    const auto serial = run_experiment_grid(synth.dataset, cfg, &stats);
    const auto means = serial.mean_rows();
    REQUIRE(means.size() == 91);
    CHECK(serial.rows.size() == 91 * 6);
    CHECK(stats.cells_total == 91 * 5);
    CHECK(means.front().selector == "none");
    CHECK(means.front().k == 40);
    CHECK(means[7].selector == "chi2");
    CHECK(means[7].k == 5);
    CHECK(means.back().selector == "nca");
    CHECK(means.back().classifier == Family::gnb);
    const std::string csv = report_to_csv(serial);

    cfg.jobs = 3;
    CHECK(report_to_csv(run_experiment_grid(synth.dataset, cfg)) == csv);

    testing::TempDir dir("grid_cache");
    cfg.cache_dir = dir.path();
    GridStats first;
    CHECK(report_to_csv(run_experiment_grid(synth.dataset, cfg, &first)) == csv);
    CHECK(first.cells_cached == 0);
    GridStats resumed;
    CHECK(report_to_csv(run_experiment_grid(synth.dataset, cfg, &resumed)) == csv);
    CHECK(resumed.cells_computed == 0);
    CHECK(resumed.scores_computed == 0);
}

TEST_CASE("grid cache is keyed by content") {
    testing::TempDir dir("grid_key");
    auto cfg = small_grid();
    cfg.selectors = {SelectorMethod::chi2};
    cfg.k_values = {5};
    cfg.classifiers = {Family::knn};
    cfg.cache_dir = dir.path();
    (void)run_experiment_grid(small_synth(3).dataset, cfg);
    GridStats other;
    (void)run_experiment_grid(small_synth(4).dataset, cfg, &other);
    CHECK(other.cells_cached == 0);
    cfg.classifier.knn.k = 3;
    GridStats changed;
    (void)run_experiment_grid(small_synth(4).dataset, cfg, &changed);
    CHECK(changed.cells_computed == 10);
    CHECK(changed.scores_cached == 5);
}

TEST_CASE("CSV report round-trips and markdown carries the tables") {
    auto cfg = small_grid();
    cfg.selectors = {SelectorMethod::nca};
    cfg.k_values = {10, 20};
    cfg.classifiers = {Family::svm_rbf, Family::lda};
    const auto report = run_experiment_grid(small_synth().dataset, cfg);
    const auto csv = report_to_csv(report);
    CHECK(csv.rfind("selector,k,classifier,fold,accuracy,precision,recall,f1\n", 0) == 0);
    CHECK(csv.find(",mean,") != std::string::npos);
    CHECK(report_to_csv(report_from_csv(csv)) == csv);

    const auto md = report_to_markdown(report);
    CHECK(md.find("SVM-rbf") != std::string::npos);
    CHECK(md.find("f1-score") != std::string::npos);
    CHECK(md.find("| 20 | accuracy |") < md.find("| 10 | accuracy |"));
    CHECK(md.find("## NCA feature selection") != std::string::npos);
    CHECK_THROWS_AS(report_from_csv("selector,k\nnone,1\n"), format_error);
}

TEST_CASE("parallel_for runs every index and rethrows the first failure") {
    std::atomic<int> sum{0};
    parallel_for(100, 4, [&](std::size_t i) { sum += static_cast<int>(i); });
    CHECK(sum == 4950);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) throw data_error("seven");
                    }),
                    data_error);
}
