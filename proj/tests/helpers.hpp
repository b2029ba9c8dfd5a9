#pragma once

#include "sigsel/dataset.hpp"
#include "sigsel/rng.hpp"

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

namespace testing {

inline sigsel::Matrix to_matrix(const std::vector<std::vector<double>> &rows) {
    sigsel::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

inline std::vector<std::vector<double>> to_rows(const sigsel::Matrix &m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()),
                                          std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
    return rows;
}

/// Gaussian blobs: class k centered at `spread * k` on every column.
inline sigsel::Matrix gaussian_blobs(sigsel::Rng &rng, const sigsel::Labels &labels, int p, double spread) {
    sigsel::Matrix m(static_cast<Eigen::Index>(labels.size()), p);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (int j = 0; j < p; ++j) {
            m(static_cast<Eigen::Index>(i), j) = spread * labels[i] * ((j % 2) ? 1.0 : -1.0) + rng.normal();
        }
    }
    return m;
}

inline sigsel::Labels balanced_labels(int classes, int per_class) {
    sigsel::Labels y;
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class; ++i) y.push_back(c);
    }
    return y;
}

inline sigsel::EmbeddingDataset random_dataset(sigsel::Rng &rng, std::size_t n, std::size_t p, std::size_t c) {
    sigsel::EmbeddingDataset ds;
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = static_cast<float>(rng.normal() * 3);
    for (std::size_t k = 0; k < c; ++k) ds.class_names.push_back("class_" + std::to_string(100 + k));
    for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(i < c ? i : rng.below(c)));
    return ds;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string &tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("sigsel_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    [[nodiscard]] const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

}  // namespace testing

