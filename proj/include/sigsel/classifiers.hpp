#pragma once

#include "sigsel/dataset.hpp"
#include "sigsel/smo.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace sigsel {

enum class Family { svm_rbf, svm_poly, svm_linear, knn, dtree, lda, gnb };

inline constexpr std::array<Family, 7> all_families = {Family::svm_rbf, Family::svm_poly, Family::svm_linear,
                                                       Family::knn,     Family::dtree,    Family::lda,
                                                       Family::gnb};

std::string_view to_string(Family family) noexcept;
Family parse_family(std::string_view name);
/// Display name used in report tables, e.g. "SVM-rbf".
std::string_view display_name(Family family) noexcept;

enum class Multiclass { ovo, ovr };

struct SvmConfig {
    double C = 1.0;
    double tol = 1e-3;
    int max_passes = 200;
    /// Unset means 1 / (p * mean column variance) of the training matrix.
    std::optional<double> gamma;
    int degree = 3;
    double coef0 = 0.0;
    Multiclass multiclass = Multiclass::ovo;
};

struct KnnConfig {
    int k = 5;
};

struct TreeConfig {
    int min_samples_split = 2;
    std::optional<int> max_depth;
};

struct GnbConfig {
    /// Added variance as a fraction of the largest column variance.
    double var_smoothing = 1e-9;
};

struct LdaConfig {
    /// Singular values below svd_tol * largest are dropped from the pseudo-inverse.
    double svd_tol = 1e-9;
};

struct ClassifierConfig {
    Family family = Family::svm_rbf;
    SvmConfig svm;
    KnnConfig knn;
    TreeConfig dtree;
    GnbConfig gnb;
    LdaConfig lda;

    /// Throws argument_error on out-of-range hyperparameters.
    void validate() const;
};

struct BinarySvm {
    int positive_class = 0;
    /// -1 for one-vs-rest problems.
    int negative_class = -1;
    /// Rows of SvmModel::support and their alpha_i * y_i.
    std::vector<int> support_index;
    std::vector<double> coef;
    double bias = 0.0;
    bool converged = true;
};

struct SvmModel {
    KernelParams kernel;
    Multiclass multiclass = Multiclass::ovo;
    Matrix support;
    std::vector<BinarySvm> machines;
};

struct KnnModel {
    int k = 5;
    Matrix points;
    Labels labels;
};

struct TreeNode {
    /// -1 marks a leaf.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
};

struct TreeModel {
    std::vector<TreeNode> nodes;
};

struct LdaModel {
    /// One row per class: discriminant weights and offsets.
    Matrix coef;
    Vector intercept;
};

struct GnbModel {
    Matrix mean;
    Matrix var;
    Vector log_prior;
};

/// A fitted model of one of the seven families. Immutable after fit.
class TrainedClassifier {
  public:
    using Params = std::variant<SvmModel, KnnModel, TreeModel, LdaModel, GnbModel>;

    TrainedClassifier(Family family, std::size_t n_features, std::vector<int> classes, Params params);

    [[nodiscard]] Family family() const noexcept { return family_; }
    [[nodiscard]] std::size_t n_features() const noexcept { return n_features_; }
    /// Sorted class ids seen in training.
    [[nodiscard]] const std::vector<int> &classes() const noexcept { return classes_; }
    [[nodiscard]] const Params &params() const noexcept { return params_; }

    /// Per-row class ids; throws argument_error when the column count differs from training.
    [[nodiscard]] Labels predict(const Matrix &x) const;

    /// Versioned binary blob (family tag + parameters). Not stable across versions.
    [[nodiscard]] std::string serialize() const;
    static TrainedClassifier deserialize(std::string_view bytes);

    /// True unless some SMO subproblem exhausted its iteration budget.
    [[nodiscard]] bool all_converged() const noexcept;

  private:
    Family family_;
    std::size_t n_features_;
    std::vector<int> classes_;
    Params params_;
};

/// Fits `config.family` on rows of `x`; needs m >= 2 rows and at least two classes.
TrainedClassifier fit(const ClassifierConfig &config, const Matrix &x, const Labels &labels);

inline Labels predict(const TrainedClassifier &model, const Matrix &x) { return model.predict(x); }

/// Kernel settings a config resolves to on a given training matrix.
KernelParams resolve_kernel(const ClassifierConfig &config, const Matrix &x);

}  // namespace sigsel
