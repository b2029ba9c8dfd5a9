#include "helpers.hpp"
#include "oracles.hpp"

#include "sigsel/classifiers.hpp"
#include "sigsel/error.hpp"

#include <doctest.h>

#include <numeric>

using namespace sigsel;

namespace {

ClassifierConfig config_for(Family family) {
    ClassifierConfig cfg;
    cfg.family = family;
    return cfg;
}

double accuracy(const Labels &truth, const Labels &pred) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

Matrix permute_rows(const Matrix &x, const std::vector<int> &perm) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);
    return out;
}

}  // namespace

TEST_CASE("family names") {
    for (Family f : all_families) CHECK(parse_family(to_string(f)) == f);
    CHECK(display_name(Family::svm_linear) == "SVM-Linear");
    CHECK(display_name(Family::gnb) == "Naive Bayes");
    CHECK_THROWS_AS(parse_family("random_forest"), argument_error);
}

TEST_CASE("naive Bayes separates two far clusters") {
    Rng rng(1);
    const Labels y = testing::balanced_labels(2, 15);
    Matrix x(30, 3);
    for (Eigen::Index i = 0; i < 30; ++i) {
        for (Eigen::Index r = 0; r < 3; ++r) x(i, r) = (y[static_cast<std::size_t>(i)] ? 5.0 : -5.0) + rng.normal();
    }
    const auto model = fit(config_for(Family::gnb), x, y);
    CHECK(accuracy(y, model.predict(x)) == 1.0);
}

TEST_CASE("LDA and naive Bayes agree with the closed-form oracles") {
    Rng rng(12);
    for (int classes : {2, 3}) {
        for (int trial = 0; trial < 10; ++trial) {
            const Labels y = testing::balanced_labels(classes, 12);
            const Matrix train = testing::gaussian_blobs(rng, y, 4, 0.8);
            const Labels probe_labels = testing::balanced_labels(classes, 20);
            const Matrix test = testing::gaussian_blobs(rng, probe_labels, 4, 0.8);
            const auto rows = testing::to_rows(train);
            const auto test_rows = testing::to_rows(test);

            const auto lda = fit(config_for(Family::lda), train, y);
            CHECK(lda.predict(test) == oracle::lda_predict(rows, y, test_rows));
            const auto gnb = fit(config_for(Family::gnb), train, y);
            CHECK(gnb.predict(test) == oracle::gnb_predict(rows, y, test_rows, 1e-9));
        }
    }
}

TEST_CASE("LDA tolerates a rank-deficient pooled covariance") {
    Rng rng(5);
    const Labels y = testing::balanced_labels(3, 4);
    const Matrix x = testing::gaussian_blobs(rng, y, 30, 2.0);
    const auto model = fit(config_for(Family::lda), x, y);
    const auto &params = std::get<LdaModel>(model.params());
    CHECK(params.coef.allFinite());
    CHECK(accuracy(y, model.predict(x)) == 1.0);
}

TEST_CASE("one threshold separates the classes: depth-1 tree") {
    const Matrix x = testing::to_matrix({{0.0, 5.0}, {1.0, 3.0}, {2.0, 4.0}, {3.0, 5.0}, {4.0, 3.0}, {5.0, 4.0}});
    const Labels y = {0, 0, 0, 1, 1, 1};
    const auto model = fit(config_for(Family::dtree), x, y);
    const auto &tree = std::get<TreeModel>(model.params());
    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold == 2.5);
    CHECK(model.predict(x) == y);
}

TEST_CASE("an unrestricted tree fits distinct training points exactly") {
    Rng rng(31);
    const Labels y = testing::balanced_labels(4, 10);
    const Matrix x = testing::gaussian_blobs(rng, y, 3, 0.3);
    const auto model = fit(config_for(Family::dtree), x, y);
    CHECK(model.predict(x) == y);

    ClassifierConfig stump = config_for(Family::dtree);
    stump.dtree.max_depth = 0;
    const auto leaf = fit(stump, x, y);
    CHECK(std::get<TreeModel>(leaf.params()).nodes.size() == 1);
}

TEST_CASE("1-NN returns each training point's own label") {
    Rng rng(2);
    const Labels y = testing::balanced_labels(3, 7);
    const Matrix x = testing::gaussian_blobs(rng, y, 4, 0.1);
    ClassifierConfig cfg = config_for(Family::knn);
    cfg.knn.k = 1;
    CHECK(fit(cfg, x, y).predict(x) == y);
}

TEST_CASE("KNN vote ties go to the lower class id") {
    const Matrix x = testing::to_matrix({{-1.0}, {1.0}});
    const Labels y = {1, 0};
    ClassifierConfig cfg = config_for(Family::knn);
    cfg.knn.k = 2;
    CHECK(fit(cfg, x, y).predict(testing::to_matrix({{0.0}})) == Labels{0});
}

TEST_CASE("every family separates well-spaced blobs") {
    Rng rng(77);
    const Labels y = testing::balanced_labels(3, 20);
    const Matrix x = testing::gaussian_blobs(rng, y, 6, 3.0);
    const Matrix probe = testing::gaussian_blobs(rng, y, 6, 3.0);
    for (Family f : all_families) {
        const auto model = fit(config_for(f), x, y);
        INFO(to_string(f));
        CHECK(accuracy(y, model.predict(probe)) >= 0.95);
        CHECK(model.all_converged());
        CHECK(model.classes() == std::vector<int>{0, 1, 2});
    }
}

TEST_CASE("SVM predictions do not depend on training row order") {
    Rng rng(15);
    const Labels y = testing::balanced_labels(3, 10);
    const Matrix x = testing::gaussian_blobs(rng, y, 4, 1.0);
    const Matrix probe = testing::gaussian_blobs(rng, y, 4, 1.0);
    std::vector<int> perm(y.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<int>(perm));
    Labels yp(y.size());
    for (std::size_t i = 0; i < perm.size(); ++i) yp[i] = y[static_cast<std::size_t>(perm[i])];
    for (Family f : {Family::svm_rbf, Family::svm_poly, Family::svm_linear}) {
        const auto a = fit(config_for(f), x, y).predict(probe);
        const auto b = fit(config_for(f), permute_rows(x, perm), yp).predict(probe);
        INFO(to_string(f));
        CHECK(a == b);
    }
}

TEST_CASE("naive Bayes and LDA are invariant to a common shift") {
    Rng rng(21);
    const Labels y = testing::balanced_labels(3, 15);
    const Matrix x = testing::gaussian_blobs(rng, y, 5, 0.7);
    const Matrix probe = testing::gaussian_blobs(rng, y, 5, 0.7);
    const Matrix shift = Matrix::Constant(1, 5, 12.5);
    const Matrix xs = x.rowwise() + shift.row(0);
    const Matrix probes = probe.rowwise() + shift.row(0);
    for (Family f : {Family::gnb, Family::lda}) {
        INFO(to_string(f));
        CHECK(fit(config_for(f), x, y).predict(probe) == fit(config_for(f), xs, y).predict(probes));
    }
}

TEST_CASE("fitting is deterministic and serialization round-trips") {
    Rng rng(3);
    const Labels y = testing::balanced_labels(3, 10);
    const Matrix x = testing::gaussian_blobs(rng, y, 4, 1.0);
    const Matrix probe = testing::gaussian_blobs(rng, y, 4, 1.0);
    for (Family f : all_families) {
        INFO(to_string(f));
        const auto a = fit(config_for(f), x, y);
        const auto b = fit(config_for(f), x, y);
        CHECK(a.serialize() == b.serialize());
        const auto back = TrainedClassifier::deserialize(a.serialize());
        CHECK(back.family() == f);
        CHECK(back.predict(probe) == a.predict(probe));
        CHECK(back.serialize() == a.serialize());
    }
    auto blob = fit(config_for(Family::gnb), x, y).serialize();
    CHECK_THROWS_AS(TrainedClassifier::deserialize(blob.substr(0, blob.size() - 3)), format_error);
    blob[0] = 'X';
    CHECK_THROWS_AS(TrainedClassifier::deserialize(blob), format_error);
}

TEST_CASE("one-vs-rest SVM") {
    Rng rng(8);
    const Labels y = testing::balanced_labels(3, 15);
    const Matrix x = testing::gaussian_blobs(rng, y, 4, 2.5);
    ClassifierConfig cfg = config_for(Family::svm_rbf);
    cfg.svm.multiclass = Multiclass::ovr;
    const auto model = fit(cfg, x, y);
    CHECK(std::get<SvmModel>(model.params()).machines.size() == 3);
    CHECK(accuracy(y, model.predict(x)) >= 0.95);
    cfg.svm.multiclass = Multiclass::ovo;
    CHECK(std::get<SvmModel>(fit(cfg, x, y).params()).machines.size() == 3);
}

TEST_CASE("automatic gamma follows the training spread") {
    Matrix x(4, 2);
    x << 0, 0, 2, 0, 0, 2, 2, 2;  // each column has population variance 1
    CHECK(resolve_kernel(config_for(Family::svm_rbf), x).gamma == doctest::Approx(0.5));
    CHECK(resolve_kernel(config_for(Family::svm_rbf), Matrix::Ones(3, 4)).gamma == doctest::Approx(0.25));
    ClassifierConfig fixed = config_for(Family::svm_poly);
    fixed.svm.gamma = 0.1;
    CHECK(resolve_kernel(fixed, x).gamma == 0.1);
    CHECK(resolve_kernel(fixed, x).kind == KernelKind::poly);
}

TEST_CASE("input validation") {
    const Matrix x = testing::to_matrix({{0.0, 1.0}, {1.0, 0.0}, {2.0, 2.0}});
    const Labels y = {0, 1, 0};
    const auto model = fit(config_for(Family::knn), x, y);
    CHECK_THROWS_AS((void)model.predict(Matrix::Zero(1, 3)), argument_error);
    CHECK_THROWS_AS(fit(config_for(Family::lda), x, Labels{0, 0, 0}), degenerate_input_error);
    CHECK_THROWS_AS(fit(config_for(Family::lda), x.topRows(1), Labels{0}), degenerate_input_error);
    CHECK_THROWS_AS(fit(config_for(Family::lda), x, Labels{0, 1}), argument_error);
    Matrix bad = x;
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(fit(config_for(Family::gnb), bad, y), data_error);

    ClassifierConfig cfg;
    cfg.svm.C = 0.0;
    CHECK_THROWS_AS(cfg.validate(), argument_error);
    cfg = {};
    cfg.knn.k = 0;
    CHECK_THROWS_AS(cfg.validate(), argument_error);
}
