#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sigsel {

/// Stored embeddings: 32-bit, row-major, one row per signature image.
using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Working precision for every numerical routine.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

/**
 * An n x p embedding matrix with dense class ids in [0, c).
 *
 * Class ids follow the sorted order of class names. Instances are
 * immutable in practice: every producer validates on construction and
 * consumers only read.
 */
struct EmbeddingDataset {
    FeatureMatrix features;
    Labels labels;
    std::vector<std::string> class_names;
    /// Free-text source tag. Not serialized and not part of equality.
    std::string provenance;

    [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(features.rows()); }
    [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(features.cols()); }
    [[nodiscard]] std::size_t n_classes() const noexcept { return class_names.size(); }

    friend bool operator==(const EmbeddingDataset &a, const EmbeddingDataset &b);
};

/// Throws data_error when any dataset invariant is violated.
void check_invariants(const EmbeddingDataset &dataset);

/// Builds a dataset from per-row class names, assigning ids by sorted name order.
EmbeddingDataset dataset_from_named_rows(FeatureMatrix features, const std::vector<std::string> &row_classes,
                                         std::string provenance = {});

/// Canonical binary encoding ("SGVF" v1). Deterministic for equal datasets.
std::string encode_embedding(const EmbeddingDataset &dataset);
EmbeddingDataset decode_embedding(std::string_view bytes);

EmbeddingDataset read_embedding_file(const std::filesystem::path &path);
void write_embedding_file(const EmbeddingDataset &dataset, const std::filesystem::path &path);

/// Debug interchange: header `label,f0,...,f{p-1}`, label column holds the class name.
EmbeddingDataset read_embedding_csv(const std::filesystem::path &path);
void write_embedding_csv(const EmbeddingDataset &dataset, const std::filesystem::path &path);

struct ValidationReport {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> class_counts;
    double min_value = 0.0;
    double max_value = 0.0;
    std::size_t negative_count = 0;
    /// Column of the first negative value in row-major order, or -1.
    long first_negative_column = -1;
    std::size_t non_finite_count = 0;
    bool balanced = false;
    bool chi2_eligible = false;
    /// Classes whose row count differs from the most common count.
    std::vector<int> unbalanced_classes;
    /// Structural problems (bad labels, empty classes, too few classes).
    std::vector<std::string> issues;

    [[nodiscard]] bool valid() const noexcept { return issues.empty() && non_finite_count == 0; }
};

/// Never throws on malformed input; problems land in the report.
ValidationReport validate_dataset(const EmbeddingDataset &dataset);

/// Sorted, duplicate-free column subset.
class FeatureMask {
  public:
    FeatureMask() = default;
    /// Throws argument_error unless indices are strictly increasing and below `n_features`.
    FeatureMask(std::vector<int> selected, std::size_t n_features);

    static FeatureMask all(std::size_t n_features);

    [[nodiscard]] const std::vector<int> &indices() const noexcept { return selected_; }
    [[nodiscard]] std::size_t size() const noexcept { return selected_.size(); }
    [[nodiscard]] std::size_t n_features() const noexcept { return n_features_; }

    /// Gathers the selected columns.
    [[nodiscard]] Matrix apply(const Matrix &x) const;

    friend bool operator==(const FeatureMask &, const FeatureMask &) = default;

  private:
    std::vector<int> selected_;
    std::size_t n_features_ = 0;
};

/// One index per line, ascending.
void write_mask(const FeatureMask &mask, const std::filesystem::path &path);
FeatureMask read_mask(const std::filesystem::path &path, std::size_t n_features);

/// Per-class row counts.
std::vector<std::size_t> class_counts(const Labels &labels, std::size_t n_classes);

}  // namespace sigsel
