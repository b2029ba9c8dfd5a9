#include "sigsel/evaluation.hpp"

#include "sigsel/error.hpp"
#include "sigsel/rng.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

namespace sigsel {

std::vector<int> FoldPlan::train_rows(int fold) const {
    std::vector<int> rows;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) rows.push_back(static_cast<int>(i));
    }
    return rows;
}

std::vector<int> FoldPlan::test_rows(int fold) const {
    std::vector<int> rows;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) rows.push_back(static_cast<int>(i));
    }
    return rows;
}

FoldPlan make_stratified_folds(const Labels &labels, int n_folds, std::uint64_t seed) {
    if (n_folds < 2) {
        throw argument_error(fmt::format("need at least 2 folds, got {}", n_folds));
    }
    int max_label = -1;
    for (int y : labels) {
        if (y < 0) throw argument_error(fmt::format("negative class id {}", y));
        max_label = std::max(max_label, y);
    }
    std::vector<std::vector<int>> rows_of(static_cast<std::size_t>(max_label + 1));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        rows_of[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
    }

    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.seed = seed;
    plan.fold_of.assign(labels.size(), -1);
    Rng rng(derive_seed(seed, "evaluation", "stratified_folds"));
    std::size_t dealt = 0;
    for (std::size_t c = 0; c < rows_of.size(); ++c) {
        auto &rows = rows_of[c];
        if (rows.empty()) continue;
        if (rows.size() < static_cast<std::size_t>(n_folds)) {
            throw argument_error(
                fmt::format("class {} has {} rows, fewer than the {} folds requested", c, rows.size(), n_folds));
        }
        rng.shuffle(std::span<int>(rows));
        for (int r : rows) {
            plan.fold_of[static_cast<std::size_t>(r)] = static_cast<int>(dealt % static_cast<std::size_t>(n_folds));
            ++dealt;
        }
    }
    return plan;
}

long ConfusionMatrix::total() const noexcept {
    long t = 0;
    for (long v : counts_) t += v;
    return t;
}

long ConfusionMatrix::trace() const noexcept {
    long t = 0;
    for (std::size_t i = 0; i < n_; ++i) t += at(i, i);
    return t;
}

long ConfusionMatrix::row_sum(std::size_t truth) const noexcept {
    long t = 0;
    for (std::size_t j = 0; j < n_; ++j) t += at(truth, j);
    return t;
}

long ConfusionMatrix::col_sum(std::size_t predicted) const noexcept {
    long t = 0;
    for (std::size_t i = 0; i < n_; ++i) t += at(i, predicted);
    return t;
}

ConfusionMatrix confusion_matrix(const Labels &truth, const Labels &predicted, std::size_t n_classes) {
    if (truth.size() != predicted.size()) {
        throw argument_error(fmt::format("{} true labels vs {} predictions", truth.size(), predicted.size()));
    }
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes || static_cast<std::size_t>(p) >= n_classes) {
            throw argument_error(fmt::format("label pair ({}, {}) outside [0, {})", t, p, n_classes));
        }
        ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

std::string_view to_string(Averaging averaging) noexcept {
    return averaging == Averaging::weighted ? "weighted" : "macro";
}

Averaging parse_averaging(std::string_view name) {
    if (name == "weighted") return Averaging::weighted;
    if (name == "macro") return Averaging::macro;
    throw argument_error(fmt::format("unknown averaging mode '{}' (expected weighted or macro)", name));
}

Metrics compute_metrics(const ConfusionMatrix &cm, Averaging averaging) {
    const long total = cm.total();
    if (total <= 0) {
        throw argument_error("metrics need a non-empty confusion matrix");
    }
    Metrics out;
    out.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);

    double weight_sum = 0.0;
    for (std::size_t c = 0; c < cm.n_classes(); ++c) {
        const auto tp = static_cast<double>(cm.at(c, c));
        const auto support = static_cast<double>(cm.row_sum(c));
        const auto predicted = static_cast<double>(cm.col_sum(c));
        const double fp = predicted - tp;
        const double fn = support - tp;
        const double precision = predicted > 0 ? tp / predicted : 0.0;
        const double recall = support > 0 ? tp / support : 0.0;
        const double f1_den = 2 * tp + fp + fn;
        const double f1 = f1_den > 0 ? 2 * tp / f1_den : 0.0;
        double weight;
        if (averaging == Averaging::weighted) {
            weight = support;
        } else {
            weight = (support > 0 || predicted > 0) ? 1.0 : 0.0;
        }
        out.precision += weight * precision;
        out.recall += weight * recall;
        out.f1 += weight * f1;
        weight_sum += weight;
    }
    out.precision /= weight_sum;
    out.recall /= weight_sum;
    out.f1 /= weight_sum;
    return out;
}

std::string_view to_string(const SelectorChoice &selector) noexcept {
    return selector ? to_string(*selector) : "none";
}

SelectorChoice parse_selector_choice(std::string_view name) {
    if (name == "none") return std::nullopt;
    return parse_selector_method(name);
}

Standardizer Standardizer::fit(const Matrix &x) {
    Standardizer s;
    const auto n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - s.mean[j]).square().sum() / n;
        const double sd = std::sqrt(var);
        s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Matrix Standardizer::transform(const Matrix &x) const {
    if (x.cols() != mean.size()) {
        throw argument_error(fmt::format("standardizer fitted on {} columns, got {}", mean.size(), x.cols()));
    }
    Matrix out = x.rowwise() - mean.transpose();
    out.array().rowwise() /= scale.transpose().array();
    return out;
}

namespace {

Matrix gather_rows(const FeatureMatrix &features, const std::vector<int> &rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]).cast<double>();
    }
    return out;
}

Labels gather_labels(const Labels &labels, const std::vector<int> &rows) {
    Labels out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[static_cast<std::size_t>(rows[i])];
    return out;
}

}  // namespace

FoldData prepare_fold(const EmbeddingDataset &dataset, const FoldPlan &plan, int fold) {
    if (fold < 0 || fold >= plan.n_folds) {
        throw argument_error(fmt::format("fold {} outside [0, {})", fold, plan.n_folds));
    }
    if (plan.fold_of.size() != dataset.rows()) {
        throw argument_error("fold plan does not match the dataset");
    }
    const auto train = plan.train_rows(fold);
    const auto test = plan.test_rows(fold);
    FoldData d;
    d.train_raw = gather_rows(dataset.features, train);
    d.test_raw = gather_rows(dataset.features, test);
    d.train_labels = gather_labels(dataset.labels, train);
    d.test_labels = gather_labels(dataset.labels, test);
    d.standardizer = Standardizer::fit(d.train_raw);
    d.train_std = d.standardizer.transform(d.train_raw);
    d.test_std = d.standardizer.transform(d.test_raw);
    return d;
}

FeatureScores score_training_split(const FoldData &fold, SelectorMethod method, const PipelineConfig &config) {
    switch (method) {
    case SelectorMethod::chi2: return chi2_scores(fold.train_raw, fold.train_labels);
    case SelectorMethod::mi: return mi_scores(fold.train_std, fold.train_labels, config.mi);
    case SelectorMethod::nca: return nca_fit(fold.train_std, fold.train_labels, config.nca);
    }
    throw argument_error("unknown selector");
}

Metrics evaluate_masked(const FoldData &fold, const FeatureMask &mask, const ClassifierConfig &classifier,
                        std::size_t n_classes, Averaging averaging) {
    const bool raw = classifier.family == Family::dtree;
    const Matrix train = mask.apply(raw ? fold.train_raw : fold.train_std);
    const Matrix test = mask.apply(raw ? fold.test_raw : fold.test_std);
    const auto model = fit(classifier, train, fold.train_labels);
    const auto predicted = model.predict(test);
    return compute_metrics(confusion_matrix(fold.test_labels, predicted, n_classes), averaging);
}

FoldPreprocessing fit_fold_preprocessing(const EmbeddingDataset &dataset, const FoldPlan &plan, int fold,
                                         const SelectorChoice &selector, std::size_t k, const PipelineConfig &config) {
    const auto data = prepare_fold(dataset, plan, fold);
    FoldPreprocessing out{data.standardizer, FeatureMask::all(dataset.cols())};
    if (selector) {
        out.mask = select_top_k(score_training_split(data, *selector, config), k);
    }
    return out;
}

MetricRow run_pipeline_fold(const EmbeddingDataset &dataset, const FoldPlan &plan, int fold,
                            const SelectorChoice &selector, std::size_t k, const ClassifierConfig &classifier,
                            const PipelineConfig &config) {
    if (selector && (k < 1 || k > dataset.cols())) {
        throw argument_error(fmt::format("k={} outside [1, {}]", k, dataset.cols()));
    }
    const auto data = prepare_fold(dataset, plan, fold);
    FeatureMask mask = FeatureMask::all(dataset.cols());
    if (selector) {
        mask = select_top_k(score_training_split(data, *selector, config), k);
    }
    MetricRow row;
    row.selector = std::string(to_string(selector));
    row.k = selector ? k : dataset.cols();
    row.classifier = classifier.family;
    row.fold = fold;
    row.metrics = evaluate_masked(data, mask, classifier, dataset.n_classes(), config.averaging);
    return row;
}

MetricRow mean_row(const std::vector<MetricRow> &fold_rows) {
    if (fold_rows.empty()) {
        throw argument_error("cannot average zero fold rows");
    }
    MetricRow out = fold_rows.front();
    out.fold = -1;
    Metrics sum;
    for (const auto &r : fold_rows) {
        sum.accuracy += r.metrics.accuracy;
        sum.precision += r.metrics.precision;
        sum.recall += r.metrics.recall;
        sum.f1 += r.metrics.f1;
    }
    const auto n = static_cast<double>(fold_rows.size());
    out.metrics = {sum.accuracy / n, sum.precision / n, sum.recall / n, sum.f1 / n};
    return out;
}

}  // namespace sigsel
