#pragma once

#include "sigsel/evaluation.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sigsel {

inline const std::vector<std::size_t> default_k_values = {200, 300, 400, 500};

struct GridConfig {
    std::uint64_t seed = 7;
    int n_folds = 5;
    std::vector<SelectorMethod> selectors = {SelectorMethod::chi2, SelectorMethod::mi, SelectorMethod::nca};
    std::vector<std::size_t> k_values = default_k_values;
    std::vector<Family> classifiers = {all_families.begin(), all_families.end()};
    /// Adds the no-selection baseline row per classifier.
    bool include_baseline = true;
    /// Hyperparameters shared by every classifier; `family` is overwritten per cell.
    ClassifierConfig classifier;
    PipelineConfig pipeline;
    int jobs = 1;
    /// When set, per-cell results and selector scores are cached here keyed by content hash.
    std::optional<std::filesystem::path> cache_dir;
    /// Also select masks on the full dataset (reported in ExperimentReport::full_masks).
    bool full_data_masks = false;
};

struct ExperimentReport {
    /// Canonical order: baseline first, then selectors as configured, k ascending as configured,
    /// classifiers as configured; per-fold rows followed by the mean row.
    std::vector<MetricRow> rows;
    /// Masks selected on every row of the dataset, keyed by (selector, k).
    std::map<std::pair<std::string, std::size_t>, FeatureMask> full_masks;

    [[nodiscard]] std::vector<MetricRow> mean_rows() const;
};

struct GridStats {
    std::size_t cells_total = 0;
    std::size_t cells_computed = 0;
    std::size_t cells_cached = 0;
    std::size_t scores_computed = 0;
    std::size_t scores_cached = 0;
};

using GridLogger = std::function<void(const std::string &)>;

/// Runs {none} + selectors x k, times every classifier, over all folds.
/// Results are identical for any `jobs` value and across cached resumes.
ExperimentReport run_experiment_grid(const EmbeddingDataset &dataset, const GridConfig &config,
                                     GridStats *stats = nullptr, const GridLogger &log = {});

/// Stable textual description of every setting that affects results.
std::string describe(const GridConfig &config);

/// `selector,k,classifier,fold,accuracy,precision,recall,f1`, six decimals, fold is an id or `mean`.
std::string report_to_csv(const ExperimentReport &report);
ExperimentReport report_from_csv(std::string_view csv);

/// Percent tables in the layout of the published result tables, one per selector,
/// with published reference values noted where a cell has one.
std::string report_to_markdown(const ExperimentReport &report);

/// Published reference values (percent accuracy) keyed by (selector, k or 0 for baseline, family).
struct ReferenceValue {
    std::string selector;
    std::size_t k;
    Family classifier;
    double accuracy_percent;
    std::string note;
};
const std::vector<ReferenceValue> &reference_values();

/// Runs `task(i)` for i in [0, n) on up to `jobs` threads; rethrows the lowest-index failure.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)> &task);

}  // namespace sigsel
