#pragma once

#include "sigsel/dataset.hpp"

#include <cstdint>
#include <vector>

namespace sigsel {

struct SynthConfig {
    int n_classes = 20;
    int per_class = 30;
    int p = 1280;
    /// Number of columns that carry class signal; placed at seeded random positions.
    int informative = 64;
    /// Class means differ by this many within-class standard deviations per
    /// informative column (RMS), and no two means are closer than this in Euclidean norm.
    double separation = 4.0;
    std::uint64_t seed = 7;

    /// Throws argument_error when the config cannot be realized.
    void validate() const;
};

struct SynthDataset {
    EmbeddingDataset dataset;
    /// Ascending column indices of the informative dimensions.
    std::vector<int> informative_columns;
};

/// Gaussian class clusters on the informative columns, unit noise everywhere,
/// globally shifted so the minimum value is 0. Rows are grouped by class.
SynthDataset generate_synthetic(const SynthConfig &config);

inline EmbeddingDataset generate_synthetic_dataset(const SynthConfig &config) {
    return generate_synthetic(config).dataset;
}

}  // namespace sigsel
