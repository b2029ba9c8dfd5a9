#include "classifiers_detail.hpp"

#include "sigsel/error.hpp"

#include <Eigen/SVD>
#include <fmt/core.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

namespace sigsel {

std::string_view to_string(Family family) noexcept {
    switch (family) {
    case Family::svm_rbf: return "svm_rbf";
    case Family::svm_poly: return "svm_poly";
    case Family::svm_linear: return "svm_linear";
    case Family::knn: return "knn";
    case Family::dtree: return "dtree";
    case Family::lda: return "lda";
    case Family::gnb: return "gnb";
    }
    return "?";
}

std::string_view display_name(Family family) noexcept {
    switch (family) {
    case Family::svm_rbf: return "SVM-rbf";
    case Family::svm_poly: return "SVM-poly";
    case Family::svm_linear: return "SVM-Linear";
    case Family::knn: return "KNN";
    case Family::dtree: return "DT";
    case Family::lda: return "LDA";
    case Family::gnb: return "Naive Bayes";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    for (Family f : all_families) {
        if (to_string(f) == name) return f;
    }
    throw argument_error(fmt::format("unknown classifier '{}'", name));
}

void ClassifierConfig::validate() const {
    if (!(svm.C > 0.0)) throw argument_error("SVM C must be positive");
    if (!(svm.tol > 0.0)) throw argument_error("SVM tol must be positive");
    if (svm.max_passes < 1) throw argument_error("SVM max_passes must be at least 1");
    if (svm.degree < 1) throw argument_error("SVM degree must be at least 1");
    if (svm.gamma && !(*svm.gamma > 0.0)) throw argument_error("SVM gamma must be positive");
    if (knn.k < 1) throw argument_error("KNN k must be at least 1");
    if (dtree.min_samples_split < 2) throw argument_error("tree min_samples_split must be at least 2");
    if (dtree.max_depth && *dtree.max_depth < 0) throw argument_error("tree max_depth must be non-negative");
    if (!(gnb.var_smoothing >= 0.0)) throw argument_error("GNB var_smoothing must be non-negative");
    if (!(lda.svd_tol >= 0.0)) throw argument_error("LDA svd_tol must be non-negative");
}

KernelParams resolve_kernel(const ClassifierConfig &config, const Matrix &x) {
    KernelParams k;
    switch (config.family) {
    case Family::svm_rbf: k.kind = KernelKind::rbf; break;
    case Family::svm_poly: k.kind = KernelKind::poly; break;
    case Family::svm_linear: k.kind = KernelKind::linear; break;
    default: throw argument_error("resolve_kernel called for a non-SVM family");
    }
    k.degree = config.svm.degree;
    k.coef0 = config.svm.coef0;
    if (config.svm.gamma) {
        k.gamma = *config.svm.gamma;
    } else {
        const double p = static_cast<double>(x.cols());
        double mean_var = 0.0;
        if (x.rows() > 0) {
            const Eigen::RowVectorXd mu = x.colwise().mean();
            mean_var = (x.rowwise() - mu).array().square().sum() / static_cast<double>(x.rows()) / p;
        }
        k.gamma = mean_var > 0.0 ? 1.0 / (p * mean_var) : 1.0 / p;
    }
    return k;
}

namespace {

// ---- KNN -------------------------------------------------------------------

Labels predict_knn(const KnnModel &m, const std::vector<int> &classes, const Matrix &x) {
    const auto n_train = static_cast<std::size_t>(m.points.rows());
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.k), n_train);
    Labels out(static_cast<std::size_t>(x.rows()));
    std::vector<std::pair<double, int>> dist(n_train);
    std::vector<int> votes(classes.size());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (std::size_t i = 0; i < n_train; ++i) {
            dist[i] = {(m.points.row(static_cast<Eigen::Index>(i)) - x.row(r)).squaredNorm(), static_cast<int>(i)};
        }
        // Pair ordering breaks distance ties toward the lower row index.
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::fill(votes.begin(), votes.end(), 0);
        for (std::size_t t = 0; t < k; ++t) {
            const int label = m.labels[static_cast<std::size_t>(dist[t].second)];
            const auto slot = std::lower_bound(classes.begin(), classes.end(), label) - classes.begin();
            ++votes[static_cast<std::size_t>(slot)];
        }
        out[static_cast<std::size_t>(r)] = classes[detail::argmax_first(votes)];
    }
    return out;
}

// ---- CART ------------------------------------------------------------------

int majority(const std::vector<int> &rows, const Labels &labels, const std::vector<int> &classes) {
    std::vector<int> counts(classes.size(), 0);
    for (int r : rows) {
        const auto slot = std::lower_bound(classes.begin(), classes.end(), labels[static_cast<std::size_t>(r)]) -
                          classes.begin();
        ++counts[static_cast<std::size_t>(slot)];
    }
    return classes[detail::argmax_first(counts)];
}

TreeModel fit_tree(const TreeConfig &cfg, const Matrix &x, const Labels &labels, const std::vector<int> &classes) {
    using i128 = __int128;
    const auto p = static_cast<int>(x.cols());
    const std::size_t c = classes.size();
    Labels slot_of(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        slot_of[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
    }

    TreeModel tree;
    struct Pending {
        int node;
        int depth;
        std::vector<int> rows;
    };
    std::vector<Pending> stack;
    std::vector<int> all(labels.size());
    std::iota(all.begin(), all.end(), 0);
    tree.nodes.push_back({});
    stack.push_back({0, 0, std::move(all)});

    std::vector<int> order;
    std::vector<long> left_counts(c);
    std::vector<long> right_counts(c);
    while (!stack.empty()) {
        Pending job = std::move(stack.back());
        stack.pop_back();
        const auto &rows = job.rows;
        TreeNode node;
        node.label = majority(rows, labels, classes);

        bool pure = true;
        for (int r : rows) {
            if (labels[static_cast<std::size_t>(r)] != labels[static_cast<std::size_t>(rows.front())]) {
                pure = false;
                break;
            }
        }
        const bool depth_cap = cfg.max_depth && job.depth >= *cfg.max_depth;
        if (pure || depth_cap || static_cast<int>(rows.size()) < cfg.min_samples_split) {
            tree.nodes[static_cast<std::size_t>(job.node)] = node;
            continue;
        }

        // Minimizing weighted child Gini is maximizing S_L/n_L + S_R/n_R with S = sum of squared
        // class counts; compared exactly as fractions so ties are genuine ties.
        const long n = static_cast<long>(rows.size());
        int best_feature = -1;
        double best_threshold = 0.0;
        i128 best_num = -1;
        i128 best_den = 1;
        order = rows;
        for (int f = 0; f < p; ++f) {
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const double va = x(a, f);
                const double vb = x(b, f);
                return va < vb || (va == vb && a < b);
            });
            std::fill(left_counts.begin(), left_counts.end(), 0);
            std::fill(right_counts.begin(), right_counts.end(), 0);
            long sq_right = 0;
            for (int r : order) ++right_counts[static_cast<std::size_t>(slot_of[static_cast<std::size_t>(r)])];
            for (long cnt : right_counts) sq_right += cnt * cnt;
            long sq_left = 0;
            for (long t = 0; t + 1 < n; ++t) {
                const auto s = static_cast<std::size_t>(slot_of[static_cast<std::size_t>(order[t])]);
                sq_left += 2 * left_counts[s] + 1;
                ++left_counts[s];
                sq_right -= 2 * right_counts[s] - 1;
                --right_counts[s];
                const double lo = x(order[t], f);
                const double hi = x(order[t + 1], f);
                if (!(lo < hi)) continue;
                const long nl = t + 1;
                const long nr = n - nl;
                const i128 num = static_cast<i128>(sq_left) * nr + static_cast<i128>(sq_right) * nl;
                const i128 den = static_cast<i128>(nl) * nr;
                if (best_feature < 0 || num * best_den > best_num * den) {
                    best_num = num;
                    best_den = den;
                    best_feature = f;
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0) {
            tree.nodes[static_cast<std::size_t>(job.node)] = node;
            continue;
        }
        std::vector<int> left_rows;
        std::vector<int> right_rows;
        for (int r : rows) {
            (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
        }
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        tree.nodes[static_cast<std::size_t>(job.node)] = node;
        stack.push_back({node.right, job.depth + 1, std::move(right_rows)});
        stack.push_back({node.left, job.depth + 1, std::move(left_rows)});
    }
    return tree;
}

Labels predict_tree(const TreeModel &tree, const Matrix &x) {
    Labels out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::size_t at = 0;
        while (tree.nodes[at].feature >= 0) {
            const auto &nd = tree.nodes[at];
            at = static_cast<std::size_t>(x(r, nd.feature) <= nd.threshold ? nd.left : nd.right);
        }
        out[static_cast<std::size_t>(r)] = tree.nodes[at].label;
    }
    return out;
}

// ---- LDA -------------------------------------------------------------------

LdaModel fit_lda(const LdaConfig &cfg, const Matrix &x, const Labels &labels, const std::vector<int> &classes) {
    const Eigen::Index m = x.rows();
    const Eigen::Index p = x.cols();
    const auto c = static_cast<Eigen::Index>(classes.size());
    Matrix means = Matrix::Zero(c, p);
    Vector counts = Vector::Zero(c);
    std::vector<Eigen::Index> slot(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        slot[i] = std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin();
        means.row(slot[i]) += x.row(static_cast<Eigen::Index>(i));
        counts[slot[i]] += 1.0;
    }
    for (Eigen::Index k = 0; k < c; ++k) means.row(k) /= counts[k];

    Matrix centered(m, p);
    for (Eigen::Index i = 0; i < m; ++i) centered.row(i) = x.row(i) - means.row(slot[static_cast<std::size_t>(i)]);
    const double dof = m > c ? static_cast<double>(m - c) : static_cast<double>(m);

    // Pooled covariance S = Xc'Xc / dof, so S+ = V diag(dof / s^2) V' from the thin SVD of Xc.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(centered), Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    const Eigen::MatrixXd &v = svd.matrixV();
    const double top = s.size() > 0 ? s[0] * s[0] : 0.0;
    Eigen::Index rank = 0;
    while (rank < s.size() && s[rank] * s[rank] > cfg.svd_tol * top && s[rank] > 0.0) ++rank;

    const Eigen::MatrixXd vr = v.leftCols(rank);
    const Eigen::VectorXd inv = (dof / s.head(rank).array().square()).matrix();
    // coef_k = S+ mu_k.
    const Eigen::MatrixXd proj = Eigen::MatrixXd(means) * vr;  // c x rank
    LdaModel model;
    model.coef = (proj * inv.asDiagonal()) * vr.transpose();
    model.intercept.resize(c);
    for (Eigen::Index k = 0; k < c; ++k) {
        const double quad = (proj.row(k).array().square() * inv.transpose().array()).sum();
        model.intercept[k] = -0.5 * quad + std::log(counts[k] / static_cast<double>(m));
    }
    return model;
}

Labels predict_linear_scores(const Matrix &coef, const Vector &intercept, const std::vector<int> &classes,
                             const Matrix &x) {
    const Matrix scores = (x * coef.transpose()).rowwise() + intercept.transpose();
    Labels out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < scores.cols(); ++k) {
            if (scores(r, k) > scores(r, best)) best = k;
        }
        out[static_cast<std::size_t>(r)] = classes[static_cast<std::size_t>(best)];
    }
    return out;
}

// ---- Gaussian naive Bayes --------------------------------------------------

GnbModel fit_gnb(const GnbConfig &cfg, const Matrix &x, const Labels &labels, const std::vector<int> &classes) {
    const Eigen::Index m = x.rows();
    const Eigen::Index p = x.cols();
    const auto c = static_cast<Eigen::Index>(classes.size());
    GnbModel model;
    model.mean = Matrix::Zero(c, p);
    model.var = Matrix::Zero(c, p);
    Vector counts = Vector::Zero(c);
    std::vector<Eigen::Index> slot(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        slot[i] = std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin();
        model.mean.row(slot[i]) += x.row(static_cast<Eigen::Index>(i));
        counts[slot[i]] += 1.0;
    }
    for (Eigen::Index k = 0; k < c; ++k) model.mean.row(k) /= counts[k];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        model.var.row(slot[i]) += (x.row(static_cast<Eigen::Index>(i)) - model.mean.row(slot[i])).array().square().matrix();
    }
    for (Eigen::Index k = 0; k < c; ++k) model.var.row(k) /= counts[k];

    const Eigen::RowVectorXd mu = x.colwise().mean();
    const double max_var = ((x.rowwise() - mu).array().square().colwise().sum() / static_cast<double>(m)).maxCoeff();
    double eps = cfg.var_smoothing * max_var;
    if (!(eps > 0.0)) eps = std::max(cfg.var_smoothing, 1e-300);
    model.var.array() += eps;

    model.log_prior.resize(c);
    for (Eigen::Index k = 0; k < c; ++k) model.log_prior[k] = std::log(counts[k] / static_cast<double>(m));
    return model;
}

Labels predict_gnb(const GnbModel &model, const std::vector<int> &classes, const Matrix &x) {
    const Eigen::Index c = model.mean.rows();
    Eigen::VectorXd log_norm(c);
    for (Eigen::Index k = 0; k < c; ++k) {
        log_norm[k] = -0.5 * (2.0 * std::numbers::pi * model.var.row(k).array()).log().sum() + model.log_prior[k];
    }
    Labels out(static_cast<std::size_t>(x.rows()));
    std::vector<double> scores(static_cast<std::size_t>(c));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index k = 0; k < c; ++k) {
            const double quad = ((x.row(r) - model.mean.row(k)).array().square() / model.var.row(k).array()).sum();
            scores[static_cast<std::size_t>(k)] = log_norm[k] - 0.5 * quad;
        }
        out[static_cast<std::size_t>(r)] = classes[detail::argmax_first(scores)];
    }
    return out;
}

// ---- serialization ---------------------------------------------------------

constexpr char kBlobMagic[4] = {'S', 'G', 'C', 'M'};
constexpr std::uint16_t kBlobVersion = 1;

class BlobWriter {
  public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u64(std::uint64_t v) {
        for (int s = 0; s < 64; s += 8) out_.push_back(static_cast<char>((v >> s) & 0xff));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void matrix(const Matrix &m) {
        i64(m.rows());
        i64(m.cols());
        for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
    }
    void vector(const Vector &v) {
        i64(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
    }
    template <typename T>
    void ints(const std::vector<T> &v) {
        i64(static_cast<std::int64_t>(v.size()));
        for (auto x : v) i64(static_cast<std::int64_t>(x));
    }
    void reals(const std::vector<double> &v) {
        i64(static_cast<std::int64_t>(v.size()));
        for (double x : v) f64(x);
    }
    std::string take() { return std::move(out_); }

  private:
    std::string out_;
};

class BlobReader {
  public:
    explicit BlobReader(std::string_view in) : in_(in) {}
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(in_[pos_++]);
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int s = 0; s < 8; ++s) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * s);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::int64_t count(std::size_t element_size) {
        const auto n = i64();
        if (n < 0 || static_cast<std::uint64_t>(n) > (in_.size() - pos_) / element_size) {
            throw format_error("classifier blob: bad element count");
        }
        return n;
    }
    Matrix matrix() {
        const auto r = i64();
        const auto c = i64();
        if (r < 0 || c < 0 || (c > 0 && static_cast<std::uint64_t>(r) > (in_.size() - pos_) / 8 / static_cast<std::uint64_t>(c))) {
            throw format_error("classifier blob: bad matrix shape");
        }
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
        return m;
    }
    Vector vector() {
        Vector v(count(8));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
        return v;
    }
    std::vector<int> ints() {
        std::vector<int> v(static_cast<std::size_t>(count(8)));
        for (auto &x : v) x = static_cast<int>(i64());
        return v;
    }
    std::vector<double> reals() {
        std::vector<double> v(static_cast<std::size_t>(count(8)));
        for (auto &x : v) x = f64();
        return v;
    }
    std::string_view take(std::size_t n) {
        need(n);
        auto s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] bool done() const noexcept { return pos_ == in_.size(); }

  private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw truncation_error("classifier blob truncated");
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

TrainedClassifier::TrainedClassifier(Family family, std::size_t n_features, std::vector<int> classes, Params params)
    : family_(family), n_features_(n_features), classes_(std::move(classes)), params_(std::move(params)) {}

bool TrainedClassifier::all_converged() const noexcept {
    if (const auto *svm = std::get_if<SvmModel>(&params_)) {
        return std::all_of(svm->machines.begin(), svm->machines.end(), [](const auto &m) { return m.converged; });
    }
    return true;
}

Labels TrainedClassifier::predict(const Matrix &x) const {
    if (static_cast<std::size_t>(x.cols()) != n_features_) {
        throw argument_error(fmt::format("model trained on {} features, got {}", n_features_, x.cols()));
    }
    return std::visit(
        [&](const auto &m) -> Labels {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SvmModel>) {
                return detail::predict_svm(m, classes_, x);
            } else if constexpr (std::is_same_v<T, KnnModel>) {
                return predict_knn(m, classes_, x);
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                return predict_tree(m, x);
            } else if constexpr (std::is_same_v<T, LdaModel>) {
                return predict_linear_scores(m.coef, m.intercept, classes_, x);
            } else {
                return predict_gnb(m, classes_, x);
            }
        },
        params_);
}

std::string TrainedClassifier::serialize() const {
    BlobWriter w;
    for (char ch : kBlobMagic) w.u8(static_cast<std::uint8_t>(ch));
    w.u8(kBlobVersion & 0xff);
    w.u8(kBlobVersion >> 8);
    w.u8(static_cast<std::uint8_t>(family_));
    w.u64(n_features_);
    w.ints(classes_);
    std::visit(
        [&](const auto &m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SvmModel>) {
                w.u8(static_cast<std::uint8_t>(m.kernel.kind));
                w.f64(m.kernel.gamma);
                w.i64(m.kernel.degree);
                w.f64(m.kernel.coef0);
                w.u8(static_cast<std::uint8_t>(m.multiclass));
                w.matrix(m.support);
                w.i64(static_cast<std::int64_t>(m.machines.size()));
                for (const auto &b : m.machines) {
                    w.i64(b.positive_class);
                    w.i64(b.negative_class);
                    w.ints(b.support_index);
                    w.reals(b.coef);
                    w.f64(b.bias);
                    w.u8(b.converged ? 1 : 0);
                }
            } else if constexpr (std::is_same_v<T, KnnModel>) {
                w.i64(m.k);
                w.matrix(m.points);
                w.ints(m.labels);
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                w.i64(static_cast<std::int64_t>(m.nodes.size()));
                for (const auto &nd : m.nodes) {
                    w.i64(nd.feature);
                    w.f64(nd.threshold);
                    w.i64(nd.left);
                    w.i64(nd.right);
                    w.i64(nd.label);
                }
            } else if constexpr (std::is_same_v<T, LdaModel>) {
                w.matrix(m.coef);
                w.vector(m.intercept);
            } else {
                w.matrix(m.mean);
                w.matrix(m.var);
                w.vector(m.log_prior);
            }
        },
        params_);
    return w.take();
}

TrainedClassifier TrainedClassifier::deserialize(std::string_view bytes) {
    BlobReader r(bytes);
    if (r.take(4) != std::string_view(kBlobMagic, 4)) throw format_error("not a classifier blob");
    const auto version = static_cast<std::uint16_t>(r.u8() | (r.u8() << 8));
    if (version != kBlobVersion) throw format_error(fmt::format("unsupported classifier blob version {}", version));
    const auto tag = r.u8();
    if (tag >= all_families.size()) throw format_error("unknown family tag in classifier blob");
    const auto family = static_cast<Family>(tag);
    const auto n_features = static_cast<std::size_t>(r.u64());
    auto classes = r.ints();

    Params params;
    switch (family) {
    case Family::svm_rbf:
    case Family::svm_poly:
    case Family::svm_linear: {
        SvmModel m;
        m.kernel.kind = static_cast<KernelKind>(r.u8());
        m.kernel.gamma = r.f64();
        m.kernel.degree = static_cast<int>(r.i64());
        m.kernel.coef0 = r.f64();
        m.multiclass = static_cast<Multiclass>(r.u8());
        m.support = r.matrix();
        const auto n = r.count(1);
        for (std::int64_t i = 0; i < n; ++i) {
            BinarySvm b;
            b.positive_class = static_cast<int>(r.i64());
            b.negative_class = static_cast<int>(r.i64());
            b.support_index = r.ints();
            b.coef = r.reals();
            b.bias = r.f64();
            b.converged = r.u8() != 0;
            for (int s : b.support_index) {
                if (s < 0 || s >= m.support.rows()) throw format_error("classifier blob: support index out of range");
            }
            m.machines.push_back(std::move(b));
        }
        params = std::move(m);
        break;
    }
    case Family::knn: {
        KnnModel m;
        m.k = static_cast<int>(r.i64());
        m.points = r.matrix();
        m.labels = r.ints();
        params = std::move(m);
        break;
    }
    case Family::dtree: {
        TreeModel m;
        const auto n = r.count(40);
        m.nodes.resize(static_cast<std::size_t>(n));
        for (auto &nd : m.nodes) {
            nd.feature = static_cast<int>(r.i64());
            nd.threshold = r.f64();
            nd.left = static_cast<int>(r.i64());
            nd.right = static_cast<int>(r.i64());
            nd.label = static_cast<int>(r.i64());
        }
        params = std::move(m);
        break;
    }
    case Family::lda: {
        LdaModel m;
        m.coef = r.matrix();
        m.intercept = r.vector();
        params = std::move(m);
        break;
    }
    case Family::gnb: {
        GnbModel m;
        m.mean = r.matrix();
        m.var = r.matrix();
        m.log_prior = r.vector();
        params = std::move(m);
        break;
    }
    }
    if (!r.done()) throw format_error("trailing bytes in classifier blob");
    return TrainedClassifier(family, n_features, std::move(classes), std::move(params));
}

TrainedClassifier fit(const ClassifierConfig &config, const Matrix &x, const Labels &labels) {
    config.validate();
    if (static_cast<std::size_t>(x.rows()) != labels.size()) {
        throw argument_error(fmt::format("{} labels for {} rows", labels.size(), x.rows()));
    }
    if (x.rows() < 2) {
        throw degenerate_input_error(fmt::format("need at least 2 training rows, got {}", x.rows()));
    }
    if (!x.allFinite()) {
        throw data_error("training features contain non-finite values");
    }
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) {
        throw degenerate_input_error("training data contains a single class");
    }
    const auto p = static_cast<std::size_t>(x.cols());

    switch (config.family) {
    case Family::svm_rbf:
    case Family::svm_poly:
    case Family::svm_linear:
        return TrainedClassifier(config.family, p, classes, detail::fit_svm(config, x, labels, classes));
    case Family::knn:
        return TrainedClassifier(config.family, p, classes, KnnModel{config.knn.k, x, labels});
    case Family::dtree:
        return TrainedClassifier(config.family, p, classes, fit_tree(config.dtree, x, labels, classes));
    case Family::lda:
        return TrainedClassifier(config.family, p, classes, fit_lda(config.lda, x, labels, classes));
    case Family::gnb:
        return TrainedClassifier(config.family, p, classes, fit_gnb(config.gnb, x, labels, classes));
    }
    throw argument_error("unknown classifier family");
}

}  // namespace sigsel
