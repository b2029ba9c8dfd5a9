#include "sigsel/smo.hpp"

#include "sigsel/error.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sigsel {

namespace {

constexpr double kTau = 1e-12;

double dot(std::span<const double> x, std::span<const double> z) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * z[i];
    }
    return s;
}

}  // namespace

double kernel_eval(const KernelParams &params, std::span<const double> x, std::span<const double> z) {
    if (x.size() != z.size()) {
        throw argument_error(fmt::format("kernel arguments differ in length ({} vs {})", x.size(), z.size()));
    }
    switch (params.kind) {
    case KernelKind::linear: return dot(x, z);
    case KernelKind::poly: return std::pow(params.gamma * dot(x, z) + params.coef0, params.degree);
    case KernelKind::rbf: {
        double sq = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - z[i];
            sq += d * d;
        }
        return std::exp(-params.gamma * sq);
    }
    }
    return 0.0;
}

Matrix kernel_matrix(const KernelParams &params, const Matrix &a, const Matrix &b) {
    if (a.cols() != b.cols()) {
        throw argument_error(fmt::format("kernel_matrix: {} vs {} columns", a.cols(), b.cols()));
    }
    Matrix k = a * b.transpose();
    switch (params.kind) {
    case KernelKind::linear: break;
    case KernelKind::poly:
        k = (params.gamma * k.array() + params.coef0).pow(static_cast<double>(params.degree)).matrix();
        break;
    case KernelKind::rbf: {
        const Eigen::VectorXd an = a.rowwise().squaredNorm();
        const Eigen::VectorXd bn = b.rowwise().squaredNorm();
        for (Eigen::Index i = 0; i < k.rows(); ++i) {
            for (Eigen::Index j = 0; j < k.cols(); ++j) {
                const double sq = std::max(0.0, an[i] + bn[j] - 2.0 * k(i, j));
                k(i, j) = std::exp(-params.gamma * sq);
            }
        }
        break;
    }
    }
    return k;
}

double svm_dual_objective(const Matrix &gram, std::span<const int> y, const Vector &alpha) {
    const auto m = static_cast<Eigen::Index>(y.size());
    double linear = 0.0;
    double quad = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        linear += alpha[i];
        if (alpha[i] == 0.0) continue;
        for (Eigen::Index j = 0; j < m; ++j) {
            quad += alpha[i] * alpha[j] * y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * gram(i, j);
        }
    }
    return linear - 0.5 * quad;
}

double svm_kkt_violation(const Matrix &gram, std::span<const int> y, const Vector &alpha, double bias, double C) {
    const auto m = static_cast<Eigen::Index>(y.size());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        double f = bias;
        for (Eigen::Index j = 0; j < m; ++j) {
            f += alpha[j] * y[static_cast<std::size_t>(j)] * gram(j, i);
        }
        const double margin = y[static_cast<std::size_t>(i)] * f;
        double v;
        if (alpha[i] <= 0.0) {
            v = std::max(0.0, 1.0 - margin);
        } else if (alpha[i] >= C) {
            v = std::max(0.0, margin - 1.0);
        } else {
            v = std::abs(margin - 1.0);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

SmoResult smo_solve(const Matrix &gram, std::span<const int> y, const SmoOptions &opt) {
    const auto m = static_cast<Eigen::Index>(y.size());
    if (gram.rows() != m || gram.cols() != m) {
        throw argument_error(fmt::format("gram is {}x{} for {} labels", gram.rows(), gram.cols(), m));
    }
    if (!(opt.C > 0.0) || !(opt.tol > 0.0) || opt.max_passes < 1) {
        throw argument_error("SMO requires C > 0, tol > 0 and max_passes >= 1");
    }
    bool has_pos = false;
    bool has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw argument_error(fmt::format("SMO labels must be +1 or -1, got {}", v));
    }
    if (!has_pos || !has_neg) {
        throw degenerate_input_error("SMO needs both a positive and a negative example");
    }

    const double C = opt.C;
    auto yi = [&](Eigen::Index i) { return static_cast<double>(y[static_cast<std::size_t>(i)]); };
    auto q = [&](Eigen::Index i, Eigen::Index j) { return yi(i) * yi(j) * gram(i, j); };

    SmoResult res;
    Vector alpha = Vector::Zero(m);
    // Gradient of 1/2 a'Qa - e'a.
    Vector grad = Vector::Constant(m, -1.0);
    auto in_up = [&](Eigen::Index t) { return (yi(t) > 0 && alpha[t] < C) || (yi(t) < 0 && alpha[t] > 0); };
    auto in_low = [&](Eigen::Index t) { return (yi(t) > 0 && alpha[t] > 0) || (yi(t) < 0 && alpha[t] < C); };

    if (opt.record_trace) {
        res.dual_trace.push_back(0.0);
    }
    const long budget = static_cast<long>(opt.max_passes) * static_cast<long>(m);
    double gap_max = 0.0;
    double gap_min = 0.0;
    for (;;) {
        Eigen::Index i = -1;
        Eigen::Index j = -1;
        double up_max = -std::numeric_limits<double>::infinity();
        double low_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < m; ++t) {
            const double v = -yi(t) * grad[t];
            if (in_up(t) && v > up_max) {
                up_max = v;
                i = t;
            }
            if (in_low(t) && v < low_min) {
                low_min = v;
                j = t;
            }
        }
        gap_max = up_max;
        gap_min = low_min;
        if (i < 0 || j < 0 || up_max - low_min < opt.tol) {
            res.converged = true;
            break;
        }
        if (res.iterations >= budget) {
            break;
        }
        ++res.iterations;

        const double ai_old = alpha[i];
        const double aj_old = alpha[j];
        if (yi(i) != yi(j)) {
            double quad = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else if (alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = sum;
            }
        }

        const double di = alpha[i] - ai_old;
        const double dj = alpha[j] - aj_old;
        for (Eigen::Index t = 0; t < m; ++t) {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
        if (opt.record_trace) {
            // e'a - 1/2 a'Qa with Qa = grad + e.
            double dual = 0.0;
            for (Eigen::Index t = 0; t < m; ++t) {
                dual -= 0.5 * alpha[t] * (grad[t] - 1.0);
            }
            res.dual_trace.push_back(dual);
        }
    }

    // Bias: mean over free vectors, else the middle of the feasible interval.
    double free_sum = 0.0;
    long free_count = 0;
    for (Eigen::Index t = 0; t < m; ++t) {
        if (alpha[t] > 0.0 && alpha[t] < C) {
            free_sum += -yi(t) * grad[t];
            ++free_count;
        }
    }
    if (free_count > 0) {
        res.bias = free_sum / static_cast<double>(free_count);
    } else if (std::isfinite(gap_max) && std::isfinite(gap_min)) {
        res.bias = 0.5 * (gap_max + gap_min);
    } else {
        res.bias = std::isfinite(gap_max) ? gap_max : gap_min;
    }
    res.alpha = std::move(alpha);
    return res;
}

}  // namespace sigsel
