#pragma once

#include "sigsel/classifiers.hpp"

namespace sigsel::detail {

SvmModel fit_svm(const ClassifierConfig &config, const Matrix &x, const Labels &labels,
                 const std::vector<int> &classes);
Labels predict_svm(const SvmModel &model, const std::vector<int> &classes, const Matrix &x);

/// Index of the largest score; exact ties go to the lowest index.
template <typename Range>
std::size_t argmax_first(const Range &scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < static_cast<std::size_t>(scores.size()); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

}  // namespace sigsel::detail
