#include "sigsel/synthdata.hpp"

#include "sigsel/error.hpp"
#include "sigsel/rng.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sigsel {

void SynthConfig::validate() const {
    if (n_classes < 2) throw argument_error("synthetic data needs at least 2 classes");
    if (per_class < 5) throw argument_error("synthetic data needs at least 5 rows per class");
    if (p < 1) throw argument_error("synthetic data needs at least one feature");
    if (informative < 0 || informative > p) {
        throw argument_error(fmt::format("informative={} outside [0, p={}]", informative, p));
    }
    if (!(separation >= 0.0)) throw argument_error("separation must be non-negative");
    if (informative == 0 && separation > 0.0) {
        throw argument_error("a positive separation needs at least one informative column");
    }
}

SynthDataset generate_synthetic(const SynthConfig &cfg) {
    cfg.validate();
    const auto c = static_cast<std::size_t>(cfg.n_classes);
    const auto p = static_cast<std::size_t>(cfg.p);
    const auto d = static_cast<std::size_t>(cfg.informative);

    SynthDataset out;
    {
        Rng rng(derive_seed(cfg.seed, "synthdata", "informative_columns"));
        std::vector<int> cols(p);
        std::iota(cols.begin(), cols.end(), 0);
        rng.shuffle(std::span<int>(cols));
        cols.resize(d);
        std::sort(cols.begin(), cols.end());
        out.informative_columns = std::move(cols);
    }

    // Means ~ N(0, separation^2 / 2) per informative column, so the expected
    // squared gap per column between two classes is separation^2.
    std::vector<std::vector<double>> means;
    {
        Rng rng(derive_seed(cfg.seed, "synthdata", "class_means"));
        const double spread = cfg.separation / std::sqrt(2.0);
        constexpr int max_attempts = 10000;
        for (std::size_t k = 0; k < c; ++k) {
            std::vector<double> mu(d);
            int attempt = 0;
            for (;;) {
                for (auto &v : mu) v = spread * rng.normal();
                const bool far_enough = std::all_of(means.begin(), means.end(), [&](const auto &other) {
                    double sq = 0.0;
                    for (std::size_t j = 0; j < d; ++j) sq += (mu[j] - other[j]) * (mu[j] - other[j]);
                    return std::sqrt(sq) >= cfg.separation;
                });
                if (far_enough) break;
                if (++attempt >= max_attempts) {
                    throw argument_error(
                        fmt::format("could not place {} class means {} apart in {} dimensions", c, cfg.separation, d));
                }
            }
            means.push_back(std::move(mu));
        }
    }

    const std::size_t n = c * static_cast<std::size_t>(cfg.per_class);
    Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    std::vector<std::string> names(n);
    const int width = std::max(3, static_cast<int>(std::to_string(c - 1).size()));
    Rng noise(derive_seed(cfg.seed, "synthdata", "noise"));
    for (std::size_t k = 0; k < c; ++k) {
        const std::string name = fmt::format("signer_{:0{}}", k, width);
        for (int r = 0; r < cfg.per_class; ++r) {
            const auto row = static_cast<Eigen::Index>(k * static_cast<std::size_t>(cfg.per_class) + static_cast<std::size_t>(r));
            for (std::size_t j = 0; j < p; ++j) values(row, static_cast<Eigen::Index>(j)) = noise.normal();
            for (std::size_t j = 0; j < d; ++j) values(row, out.informative_columns[j]) += means[k][j];
            names[static_cast<std::size_t>(row)] = name;
        }
    }

    // Shift rather than truncate so the Gaussian geometry survives.
    values.array() -= values.minCoeff();
    FeatureMatrix features = values.cast<float>();
    out.dataset = dataset_from_named_rows(
        std::move(features), names,
        fmt::format("synthetic:classes={},per_class={},p={},informative={},separation={},seed={}", cfg.n_classes,
                    cfg.per_class, cfg.p, cfg.informative, cfg.separation, cfg.seed));
    return out;
}

}  // namespace sigsel
