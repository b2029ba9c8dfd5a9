#include "sigsel/selectors.hpp"

#include "sigsel/error.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace sigsel {

namespace {

std::size_t count_classes(const Labels &labels, std::size_t n_rows) {
    if (labels.size() != n_rows) {
        throw argument_error(fmt::format("{} labels for {} rows", labels.size(), n_rows));
    }
    int max_label = -1;
    for (int y : labels) {
        if (y < 0) {
            throw argument_error(fmt::format("negative class id {}", y));
        }
        max_label = std::max(max_label, y);
    }
    return static_cast<std::size_t>(max_label + 1);
}

std::size_t present_classes(const std::vector<std::size_t> &counts) {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
}

}  // namespace

std::string_view to_string(SelectorMethod method) noexcept {
    switch (method) {
    case SelectorMethod::chi2: return "chi2";
    case SelectorMethod::mi: return "mi";
    case SelectorMethod::nca: return "nca";
    }
    return "?";
}

SelectorMethod parse_selector_method(std::string_view name) {
    if (name == "chi2") return SelectorMethod::chi2;
    if (name == "mi") return SelectorMethod::mi;
    if (name == "nca") return SelectorMethod::nca;
    throw argument_error(fmt::format("unknown selector '{}' (expected chi2, mi or nca)", name));
}

FeatureScores chi2_scores(const Matrix &x, const Labels &labels) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto p = static_cast<std::size_t>(x.cols());
    const std::size_t c = count_classes(labels, n);
    const auto counts = class_counts(labels, c);
    if (present_classes(counts) < 2) {
        throw degenerate_input_error("chi2 scoring needs at least two classes");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < p; ++r) {
            if (x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) < 0.0) {
                throw domain_error(
                    fmt::format("chi2 requires non-negative features; column {} has a negative value (row {})", r, i));
            }
        }
    }

    // observed(c, r): feature mass of column r within class c.
    Matrix observed = Matrix::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i) {
        observed.row(labels[i]) += x.row(static_cast<Eigen::Index>(i));
    }
    const Eigen::RowVectorXd totals = observed.colwise().sum();

    FeatureScores out{std::vector<double>(p, 0.0), SelectorMethod::chi2};
    for (std::size_t r = 0; r < p; ++r) {
        const double total = totals(static_cast<Eigen::Index>(r));
        if (total <= 0.0) {
            continue;
        }
        double score = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            if (counts[k] == 0) {
                continue;
            }
            const double expected = static_cast<double>(counts[k]) / static_cast<double>(n) * total;
            const double diff = observed(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r)) - expected;
            score += diff * diff / expected;
        }
        out.scores[r] = score;
    }
    return out;
}

std::vector<double> quantile_edges(std::span<const double> column, int bins) {
    if (bins < 2) {
        throw argument_error(fmt::format("MI needs at least 2 bins, got {}", bins));
    }
    std::vector<double> sorted(column.begin(), column.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    if (sorted.empty()) {
        return edges;
    }
    const std::size_t n = sorted.size();
    for (int b = 1; b < bins; ++b) {
        const std::size_t idx = std::min(n - 1, static_cast<std::size_t>(b) * n / static_cast<std::size_t>(bins));
        const double edge = sorted[idx];
        if (edges.empty() || edges.back() != edge) {
            edges.push_back(edge);
        }
    }
    return edges;
}

std::vector<int> discretize(std::span<const double> column, const std::vector<double> &edges) {
    std::vector<int> bins(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) {
        bins[i] = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), column[i]) - edges.begin());
    }
    return bins;
}

double plugin_mutual_information(std::span<const std::size_t> joint, std::size_t n_bins, std::size_t n_classes) {
    if (joint.size() != n_bins * n_classes) {
        throw argument_error("joint table size does not match its shape");
    }
    std::vector<double> bin_total(n_bins, 0.0);
    std::vector<double> class_total(n_classes, 0.0);
    double total = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        for (std::size_t k = 0; k < n_classes; ++k) {
            const auto v = static_cast<double>(joint[b * n_classes + k]);
            bin_total[b] += v;
            class_total[k] += v;
            total += v;
        }
    }
    if (total <= 0.0) {
        return 0.0;
    }
    double mi = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        for (std::size_t k = 0; k < n_classes; ++k) {
            const auto v = static_cast<double>(joint[b * n_classes + k]);
            if (v == 0.0) {
                continue;
            }
            // p(a,b) log(p(a,b) / (p(a) p(b))) with counts: (v/N) log(v N / (B K)).
            mi += v / total * std::log(v * total / (bin_total[b] * class_total[k]));
        }
    }
    // Rounding can leave a tiny negative residue on independent tables.
    return std::max(mi, 0.0);
}

FeatureScores mi_scores(const Matrix &x, const Labels &labels, const MIConfig &config) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto p = static_cast<std::size_t>(x.cols());
    const std::size_t c = count_classes(labels, n);
    if (present_classes(class_counts(labels, c)) < 2) {
        throw degenerate_input_error("MI scoring needs at least two classes");
    }
    if (config.bins < 2) {
        throw argument_error(fmt::format("MI needs at least 2 bins, got {}", config.bins));
    }

    FeatureScores out{std::vector<double>(p, 0.0), SelectorMethod::mi};
    std::vector<double> column(n);
    std::vector<std::size_t> joint;
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r));
        }
        const auto edges = quantile_edges(column, config.bins);
        const auto bin_of = discretize(column, edges);
        const std::size_t n_bins = edges.size() + 1;
        joint.assign(n_bins * c, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++joint[static_cast<std::size_t>(bin_of[i]) * c + static_cast<std::size_t>(labels[i])];
        }
        out.scores[r] = plugin_mutual_information(joint, n_bins, c);
    }
    return out;
}

NCAEvaluation nca_objective(const Matrix &x, const Labels &labels, const Vector &weights, double sigma,
                            double lambda) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n || weights.size() != p) {
        throw argument_error("NCA objective: shape mismatch between features, labels and weights");
    }
    const Eigen::VectorXd w2 = weights.array().square();

    // Pairwise weighted L1 distances, upper triangle mirrored.
    Matrix dist = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double *xi = x.row(i).data();
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double *xj = x.row(j).data();
            double d = 0.0;
            for (Eigen::Index r = 0; r < p; ++r) {
                d += w2[r] * std::abs(xi[r] - xj[r]);
            }
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }

    // Neighbor probabilities; shifting by the row minimum keeps exp() in range.
    Matrix prob = Matrix::Zero(n, n);
    Eigen::VectorXd p_same(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) dmin = std::min(dmin, dist(i, j));
        }
        double denom = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const double k = std::exp(-(dist(i, j) - dmin) / sigma);
            prob(i, j) = k;
            denom += k;
        }
        double same = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            prob(i, j) /= denom;
            if (j != i && labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
                same += prob(i, j);
            }
        }
        p_same[i] = same;
    }

    NCAEvaluation out;
    out.objective = p_same.sum() / static_cast<double>(n) - lambda * w2.sum();

    // dF/dw_r = (2 w_r / (n sigma)) sum_{i,j} (p_i p_ij - [y_i = y_j] p_ij) |x_ir - x_jr| - 2 lambda w_r.
    // The |.| factor is symmetric, so pairs are folded into the upper triangle.
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double *xi = x.row(i).data();
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
            double coef = p_same[i] * prob(i, j) + p_same[j] * prob(j, i);
            if (same) coef -= prob(i, j) + prob(j, i);
            if (coef == 0.0) continue;
            const double *xj = x.row(j).data();
            for (Eigen::Index r = 0; r < p; ++r) {
                acc[r] += coef * std::abs(xi[r] - xj[r]);
            }
        }
    }
    out.gradient = (2.0 / (static_cast<double>(n) * sigma)) * weights.cwiseProduct(acc) - 2.0 * lambda * weights;
    return out;
}

NCAFit nca_fit_detailed(const Matrix &x, const Labels &labels, const NCAConfig &config) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (n < 2) {
        throw degenerate_input_error(fmt::format("NCA needs at least 2 rows, got {}", n));
    }
    const std::size_t c = count_classes(labels, n);
    if (present_classes(class_counts(labels, c)) < 2) {
        throw degenerate_input_error("NCA needs at least two classes");
    }
    if (!(config.sigma > 0.0) || config.max_iters < 1 || !(config.initial_step > 0.0)) {
        throw argument_error("NCA config requires sigma > 0, max_iters >= 1 and initial_step > 0");
    }
    const double lambda = config.lambda.value_or(1.0 / static_cast<double>(n));
    if (!(lambda >= 0.0)) {
        throw argument_error("NCA lambda must be non-negative");
    }

    NCAFit fit;
    Vector w = Vector::Ones(x.cols());
    auto current = nca_objective(x, labels, w, config.sigma, lambda);
    fit.objective_trace.push_back(current.objective);
    double step = config.initial_step;

    for (int it = 0; it < config.max_iters; ++it) {
        ++fit.iterations;
        Vector candidate = w + step * current.gradient;
        auto next = nca_objective(x, labels, candidate, config.sigma, lambda);
        if (next.objective > current.objective) {
            const double gain = next.objective - current.objective;
            w = std::move(candidate);
            current = std::move(next);
            fit.objective_trace.push_back(current.objective);
            step *= 2.0;
            if (gain < config.objective_tol) {
                fit.converged = true;
                break;
            }
        } else {
            ++fit.rejected_steps;
            step *= 0.5;
            if (step < 1e-300) {
                fit.converged = true;
                break;
            }
        }
    }

    fit.weights = w;
    fit.scores.method = SelectorMethod::nca;
    fit.scores.scores.resize(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.size(); ++r) {
        fit.scores.scores[static_cast<std::size_t>(r)] = w[r] * w[r];
    }
    return fit;
}

FeatureScores nca_fit(const Matrix &x, const Labels &labels, const NCAConfig &config) {
    return nca_fit_detailed(x, labels, config).scores;
}

FeatureMask select_top_k(const FeatureScores &scores, std::size_t k) {
    const std::size_t p = scores.scores.size();
    if (k < 1 || k > p) {
        throw argument_error(fmt::format("k={} outside [1, {}]", k, p));
    }
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    const auto &s = scores.scores;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), [&](int a, int b) {
        const double sa = s[static_cast<std::size_t>(a)];
        const double sb = s[static_cast<std::size_t>(b)];
        return sa > sb || (sa == sb && a < b);
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return FeatureMask(std::move(order), p);
}

void write_scores(const FeatureScores &scores, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw io_error(fmt::format("cannot open '{}' for writing", path.string()));
    }
    for (double v : scores.scores) {
        out << fmt::format("{:.17g}\n", v);
    }
}

}  // namespace sigsel
