#pragma once

#include "sigsel/classifiers.hpp"
#include "sigsel/dataset.hpp"
#include "sigsel/selectors.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sigsel {

/// Fold assignment of every row.
struct FoldPlan {
    std::vector<int> fold_of;
    int n_folds = 5;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<int> train_rows(int fold) const;
    [[nodiscard]] std::vector<int> test_rows(int fold) const;
};

/// Shuffles each class by `seed` and deals its rows round-robin over the folds,
/// continuing the deal across classes. Throws argument_error when a class has
/// fewer than `n_folds` rows.
FoldPlan make_stratified_folds(const Labels &labels, int n_folds, std::uint64_t seed);

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(std::size_t n_classes = 0) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

    [[nodiscard]] std::size_t n_classes() const noexcept { return n_; }
    [[nodiscard]] long at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
    long &at(std::size_t truth, std::size_t predicted) { return counts_[truth * n_ + predicted]; }
    [[nodiscard]] long total() const noexcept;
    [[nodiscard]] long trace() const noexcept;
    [[nodiscard]] long row_sum(std::size_t truth) const noexcept;
    [[nodiscard]] long col_sum(std::size_t predicted) const noexcept;

  private:
    std::size_t n_;
    std::vector<long> counts_;
};

/// Throws argument_error on length mismatch or ids outside [0, n_classes).
ConfusionMatrix confusion_matrix(const Labels &truth, const Labels &predicted, std::size_t n_classes);

enum class Averaging { weighted, macro };
std::string_view to_string(Averaging averaging) noexcept;
Averaging parse_averaging(std::string_view name);

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/**
 * Accuracy is trace / total. Per class, precision = TP/(TP+FP),
 * recall = TP/(TP+FN) and F1 = 2TP/(2TP+FP+FN), each 0 when its
 * denominator is 0. Weighted averaging uses true-class support as weights
 * (so weighted recall equals accuracy); macro averages over every class
 * that appears in truth or predictions. Throws argument_error on an empty matrix.
 */
Metrics compute_metrics(const ConfusionMatrix &cm, Averaging averaging = Averaging::weighted);

/// Selector label used in reports; nullopt is the no-selection baseline.
using SelectorChoice = std::optional<SelectorMethod>;
std::string_view to_string(const SelectorChoice &selector) noexcept;
SelectorChoice parse_selector_choice(std::string_view name);

struct MetricRow {
    std::string selector;
    std::size_t k = 0;
    Family classifier = Family::svm_rbf;
    /// Fold id, or -1 for the across-fold mean.
    int fold = -1;
    Metrics metrics;
};

/// Per-column mean and population standard deviation; zero spread scales by 1.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix &x);
    [[nodiscard]] Matrix transform(const Matrix &x) const;
    friend bool operator==(const Standardizer &a, const Standardizer &b) {
        return a.mean == b.mean && a.scale == b.scale;
    }
};

struct PipelineConfig {
    NCAConfig nca;
    MIConfig mi;
    Averaging averaging = Averaging::weighted;
};

/// Train/test split of one fold with the standardizer fitted on the training rows only.
struct FoldData {
    Matrix train_raw;
    Matrix test_raw;
    Labels train_labels;
    Labels test_labels;
    Standardizer standardizer;
    Matrix train_std;
    Matrix test_std;
};

FoldData prepare_fold(const EmbeddingDataset &dataset, const FoldPlan &plan, int fold);

/// Chi2 sees raw training features; MI and NCA see standardized ones.
FeatureScores score_training_split(const FoldData &fold, SelectorMethod method, const PipelineConfig &config);

/// Fits the classifier on the masked training split and scores the held-out rows.
/// Decision trees get raw features; every other family gets standardized ones.
Metrics evaluate_masked(const FoldData &fold, const FeatureMask &mask, const ClassifierConfig &classifier,
                        std::size_t n_classes, Averaging averaging);

/// Everything a fold learns before the classifier; exposed for leakage checks.
struct FoldPreprocessing {
    Standardizer standardizer;
    FeatureMask mask;
};

FoldPreprocessing fit_fold_preprocessing(const EmbeddingDataset &dataset, const FoldPlan &plan, int fold,
                                         const SelectorChoice &selector, std::size_t k, const PipelineConfig &config);

/// One cell of the experiment: selection, fit and held-out metrics for a single fold.
MetricRow run_pipeline_fold(const EmbeddingDataset &dataset, const FoldPlan &plan, int fold,
                            const SelectorChoice &selector, std::size_t k, const ClassifierConfig &classifier,
                            const PipelineConfig &config = {});

/// Arithmetic mean of per-fold rows; fold set to -1.
MetricRow mean_row(const std::vector<MetricRow> &fold_rows);

}  // namespace sigsel
