#pragma once

#include "sigsel/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sigsel {

enum class SelectorMethod { chi2, mi, nca };

std::string_view to_string(SelectorMethod method) noexcept;
/// Throws argument_error for unknown names.
SelectorMethod parse_selector_method(std::string_view name);

/// One relevance value per feature column; larger is more relevant.
struct FeatureScores {
    std::vector<double> scores;
    SelectorMethod method = SelectorMethod::chi2;
};

struct NCAConfig {
    double sigma = 1.0;
    /// Defaults to 1 / n_train when unset.
    std::optional<double> lambda;
    int max_iters = 100;
    double initial_step = 1e-2;
    double objective_tol = 1e-6;
    /// Weights start at 1, so the fit itself draws no randomness; kept for config records.
    std::uint64_t seed = 0;
};

struct MIConfig {
    int bins = 16;
};

/**
 * Chi-square statistic between each non-negative feature and the class label.
 *
 * For column r, O_cr is the feature mass inside class c and E_cr the mass
 * expected from class frequency alone; the score is sum_c (O-E)^2 / E.
 * Columns with zero total mass score 0. Throws domain_error (naming the
 * column) on any negative value and degenerate_input_error with fewer than
 * two classes present.
 */
FeatureScores chi2_scores(const Matrix &features, const Labels &labels);

/// Interior quantile edges of a column; duplicates collapsed.
std::vector<double> quantile_edges(std::span<const double> column, int bins);
/// Bin index of every value: number of edges <= value.
std::vector<int> discretize(std::span<const double> column, const std::vector<double> &edges);

/// Plug-in mutual information (natural log) of a row-major joint count table
/// with `n_bins` rows and `n_classes` columns. 0 log 0 is taken as 0.
double plugin_mutual_information(std::span<const std::size_t> joint, std::size_t n_bins, std::size_t n_classes);

/// Quantile-binned plug-in MI between each feature and the label.
FeatureScores mi_scores(const Matrix &features, const Labels &labels, const MIConfig &config = {});

/// Objective value and gradient with respect to the per-feature weights.
struct NCAEvaluation {
    double objective = 0.0;
    Vector gradient;
};

/**
 * Regularized leave-one-out neighbor objective for diagonal NCA.
 *
 * d(i,j) = sum_r w_r^2 |x_ir - x_jr|, neighbor probabilities are a softmax
 * of -d/sigma over j != i, and the objective is the mean same-class
 * probability minus lambda * |w|^2. Rows are reduced in ascending order so
 * the result does not depend on scheduling.
 */
NCAEvaluation nca_objective(const Matrix &features, const Labels &labels, const Vector &weights, double sigma,
                            double lambda);

struct NCAFit {
    FeatureScores scores;
    Vector weights;
    /// Objective after each accepted step, starting with the initial point.
    std::vector<double> objective_trace;
    int iterations = 0;
    int rejected_steps = 0;
    bool converged = false;
};

/// Gradient ascent with step doubling on improvement and halving otherwise.
NCAFit nca_fit_detailed(const Matrix &features, const Labels &labels, const NCAConfig &config = {});
/// Scores are the squared learned weights.
FeatureScores nca_fit(const Matrix &features, const Labels &labels, const NCAConfig &config = {});

/// Top-k columns by score, ties toward the lower index, returned ascending.
FeatureMask select_top_k(const FeatureScores &scores, std::size_t k);

/// One score per line, `%.17g`.
void write_scores(const FeatureScores &scores, const std::filesystem::path &path);

}  // namespace sigsel
