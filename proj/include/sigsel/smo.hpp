#pragma once

#include "sigsel/dataset.hpp"

#include <span>
#include <vector>

namespace sigsel {

enum class KernelKind { rbf, poly, linear };

struct KernelParams {
    KernelKind kind = KernelKind::rbf;
    double gamma = 1.0;
    int degree = 3;
    double coef0 = 0.0;
};

/// rbf: exp(-gamma |x-z|^2), poly: (gamma <x,z> + coef0)^degree, linear: <x,z>.
double kernel_eval(const KernelParams &params, std::span<const double> x, std::span<const double> z);

/// Kernel matrix between the rows of `a` and the rows of `b`, built from one dense product.
Matrix kernel_matrix(const KernelParams &params, const Matrix &a, const Matrix &b);

struct SmoOptions {
    double C = 1.0;
    double tol = 1e-3;
    /// Iteration budget is max_passes sweeps of m pair updates.
    int max_passes = 200;
    /// Keep the dual objective after every pair update.
    bool record_trace = false;
};

struct SmoResult {
    Vector alpha;
    double bias = 0.0;
    /// False when the iteration budget ran out first; alpha is still the latest (best) iterate.
    bool converged = false;
    long iterations = 0;
    std::vector<double> dual_trace;
};

/**
 * Soft-margin SVM dual by sequential minimal optimization.
 *
 * Each step picks the maximal violating pair and solves the two-variable
 * subproblem in closed form with box clipping. Stops when the violation
 * gap drops below `tol`, which leaves every point within tol of its KKT
 * condition for the returned bias. Labels must be +1 / -1 with both present.
 */
SmoResult smo_solve(const Matrix &gram, std::span<const int> y, const SmoOptions &options = {});

/// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
double svm_dual_objective(const Matrix &gram, std::span<const int> y, const Vector &alpha);

/// Largest KKT violation of (alpha, bias) measured on y_i f(x_i).
double svm_kkt_violation(const Matrix &gram, std::span<const int> y, const Vector &alpha, double bias, double C);

}  // namespace sigsel
