#include "classifiers_detail.hpp"

#include "sigsel/error.hpp"

#include <fmt/core.h>

#include <map>

namespace sigsel::detail {

namespace {

struct MachineBuilder {
    std::map<int, int> support_of_row;
    std::vector<int> support_rows;

    BinarySvm add(const Matrix &gram, const std::vector<int> &rows, const std::vector<int> &y, const SmoOptions &opt,
                  int positive, int negative) {
        Matrix sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
        for (std::size_t a = 0; a < rows.size(); ++a) {
            for (std::size_t b = 0; b < rows.size(); ++b) {
                sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gram(rows[a], rows[b]);
            }
        }
        const auto res = smo_solve(sub, y, opt);
        BinarySvm machine;
        machine.positive_class = positive;
        machine.negative_class = negative;
        machine.bias = res.bias;
        machine.converged = res.converged;
        for (std::size_t a = 0; a < rows.size(); ++a) {
            const double alpha = res.alpha[static_cast<Eigen::Index>(a)];
            if (alpha <= 0.0) continue;
            auto [it, inserted] = support_of_row.emplace(rows[a], static_cast<int>(support_rows.size()));
            if (inserted) support_rows.push_back(rows[a]);
            machine.support_index.push_back(it->second);
            machine.coef.push_back(alpha * y[a]);
        }
        return machine;
    }
};

}  // namespace

SvmModel fit_svm(const ClassifierConfig &config, const Matrix &x, const Labels &labels,
                 const std::vector<int> &classes) {
    SvmModel model;
    model.kernel = resolve_kernel(config, x);
    model.multiclass = config.svm.multiclass;
    const Matrix gram = kernel_matrix(model.kernel, x, x);

    SmoOptions opt;
    opt.C = config.svm.C;
    opt.tol = config.svm.tol;
    opt.max_passes = config.svm.max_passes;

    std::map<int, std::vector<int>> rows_of;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        rows_of[labels[i]].push_back(static_cast<int>(i));
    }

    MachineBuilder builder;
    if (config.svm.multiclass == Multiclass::ovo) {
        for (std::size_t a = 0; a < classes.size(); ++a) {
            for (std::size_t b = a + 1; b < classes.size(); ++b) {
                std::vector<int> rows;
                std::vector<int> y;
                // Row order follows the training matrix so fits do not depend on class order.
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    if (labels[i] == classes[a] || labels[i] == classes[b]) {
                        rows.push_back(static_cast<int>(i));
                        y.push_back(labels[i] == classes[a] ? 1 : -1);
                    }
                }
                model.machines.push_back(builder.add(gram, rows, y, opt, classes[a], classes[b]));
            }
        }
    } else {
        std::vector<int> rows(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) rows[i] = static_cast<int>(i);
        for (int cls : classes) {
            std::vector<int> y(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == cls ? 1 : -1;
            model.machines.push_back(builder.add(gram, rows, y, opt, cls, -1));
        }
    }

    model.support.resize(static_cast<Eigen::Index>(builder.support_rows.size()), x.cols());
    for (std::size_t s = 0; s < builder.support_rows.size(); ++s) {
        model.support.row(static_cast<Eigen::Index>(s)) = x.row(builder.support_rows[s]);
    }
    return model;
}

Labels predict_svm(const SvmModel &model, const std::vector<int> &classes, const Matrix &x) {
    const Matrix k = model.support.rows() > 0 ? kernel_matrix(model.kernel, x, model.support)
                                              : Matrix::Zero(x.rows(), 0);
    std::map<int, std::size_t> slot;
    for (std::size_t c = 0; c < classes.size(); ++c) slot[classes[c]] = c;

    Labels out(static_cast<std::size_t>(x.rows()));
    std::vector<long> votes(classes.size());
    std::vector<double> decision_sum(classes.size());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        std::fill(decision_sum.begin(), decision_sum.end(), 0.0);
        for (const auto &m : model.machines) {
            double dec = m.bias;
            for (std::size_t s = 0; s < m.support_index.size(); ++s) {
                dec += m.coef[s] * k(r, m.support_index[s]);
            }
            const std::size_t pos = slot.at(m.positive_class);
            if (model.multiclass == Multiclass::ovr) {
                decision_sum[pos] = dec;
                continue;
            }
            const std::size_t neg = slot.at(m.negative_class);
            ++votes[dec > 0.0 ? pos : neg];
            decision_sum[pos] += dec;
            decision_sum[neg] -= dec;
        }
        std::size_t best = 0;
        if (model.multiclass == Multiclass::ovr) {
            best = argmax_first(decision_sum);
        } else {
            for (std::size_t c = 1; c < classes.size(); ++c) {
                if (votes[c] > votes[best] || (votes[c] == votes[best] && decision_sum[c] > decision_sum[best])) {
                    best = c;
                }
            }
        }
        out[static_cast<std::size_t>(r)] = classes[best];
    }
    return out;
}

}  // namespace sigsel::detail
