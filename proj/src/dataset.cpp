#include "sigsel/dataset.hpp"

#include "sigsel/error.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace sigsel {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'V', 'F'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string &out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string &out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<char>((v >> shift) & 0xff));
    }
}

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint16_t u16(const char *what) {
        need(2, what);
        const auto v = static_cast<std::uint16_t>(byte(0) | (byte(1) << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32(const char *what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(byte(i)) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::string_view take(std::size_t count, const char *what) {
        need(count, what);
        auto out = bytes_.substr(pos_, count);
        pos_ += count;
        return out;
    }

    [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  private:
    void need(std::size_t count, const char *what) const {
        if (remaining() < count) {
            throw truncation_error(fmt::format("embedding file truncated while reading {} (need {} bytes, have {})",
                                               what, count, remaining()));
        }
    }
    [[nodiscard]] std::uint32_t byte(std::size_t offset) const {
        return static_cast<unsigned char>(bytes_[pos_ + offset]);
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xe0) == 0xc0) {
            extra = 1;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            extra = 2;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) {
            return false;
        }
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80) {
                return false;
            }
            cp = (cp << 6) | (cc & 0x3f);
        }
        constexpr std::uint32_t min_for_len[4] = {0, 0x80, 0x800, 0x10000};
        if (cp < min_for_len[extra] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
            return false;
        }
        i += extra + 1;
    }
    return true;
}

std::string read_all(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error(fmt::format("cannot open '{}' for reading", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_all(const std::filesystem::path &path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error(fmt::format("cannot open '{}' for writing", path.string()));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw io_error(fmt::format("write to '{}' failed", path.string()));
    }
}

}  // namespace

bool operator==(const EmbeddingDataset &a, const EmbeddingDataset &b) {
    if (a.features.rows() != b.features.rows() || a.features.cols() != b.features.cols()) {
        return false;
    }
    // Bitwise comparison: round-trips must preserve every payload bit.
    const auto n = static_cast<std::size_t>(a.features.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (std::bit_cast<std::uint32_t>(a.features.data()[i]) != std::bit_cast<std::uint32_t>(b.features.data()[i])) {
            return false;
        }
    }
    return a.labels == b.labels && a.class_names == b.class_names;
}

std::vector<std::size_t> class_counts(const Labels &labels, std::size_t n_classes) {
    std::vector<std::size_t> counts(n_classes, 0);
    for (int y : labels) {
        if (y >= 0 && static_cast<std::size_t>(y) < n_classes) {
            ++counts[static_cast<std::size_t>(y)];
        }
    }
    return counts;
}

void check_invariants(const EmbeddingDataset &ds) {
    const std::size_t n = ds.rows();
    const std::size_t p = ds.cols();
    const std::size_t c = ds.n_classes();
    if (n == 0 || p == 0) {
        throw data_error(fmt::format("dataset must be non-empty (n={}, p={})", n, p));
    }
    if (c < 2) {
        throw data_error(fmt::format("dataset needs at least 2 classes, has {}", c));
    }
    if (ds.labels.size() != n) {
        throw data_error(fmt::format("label count {} does not match row count {}", ds.labels.size(), n));
    }
    for (std::size_t i = 0; i < c; ++i) {
        const auto &name = ds.class_names[i];
        if (name.size() > std::numeric_limits<std::uint16_t>::max() || !valid_utf8(name)) {
            throw data_error(fmt::format("class name {} is not a valid UTF-8 string of at most 65535 bytes", i));
        }
        if (i > 0 && !(ds.class_names[i - 1] < name)) {
            throw data_error(fmt::format("class names must be unique and sorted; '{}' follows '{}'", name,
                                         ds.class_names[i - 1]));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int y = ds.labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw data_error(fmt::format("row {} has label {} outside [0, {})", i, y, c));
        }
    }
    const auto counts = class_counts(ds.labels, c);
    for (std::size_t k = 0; k < c; ++k) {
        if (counts[k] == 0) {
            throw data_error(fmt::format("class {} ('{}') has no rows", k, ds.class_names[k]));
        }
    }
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
            if (!std::isfinite(ds.features(i, j))) {
                throw data_error(fmt::format("non-finite feature value at row {}, column {}", i, j));
            }
        }
    }
}

EmbeddingDataset dataset_from_named_rows(FeatureMatrix features, const std::vector<std::string> &row_classes,
                                         std::string provenance) {
    if (static_cast<std::size_t>(features.rows()) != row_classes.size()) {
        throw argument_error(fmt::format("{} class names for {} rows", row_classes.size(), features.rows()));
    }
    std::map<std::string, int> ids;
    for (const auto &name : row_classes) {
        ids.emplace(name, 0);
    }
    EmbeddingDataset ds;
    int next = 0;
    for (auto &[name, id] : ids) {
        id = next++;
        ds.class_names.push_back(name);
    }
    ds.labels.reserve(row_classes.size());
    for (const auto &name : row_classes) {
        ds.labels.push_back(ids.at(name));
    }
    ds.features = std::move(features);
    ds.provenance = std::move(provenance);
    check_invariants(ds);
    return ds;
}

std::string encode_embedding(const EmbeddingDataset &ds) {
    check_invariants(ds);
    std::string out;
    out.reserve(18 + ds.rows() * 4 * (ds.cols() + 1));
    out.append(kMagic, 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(ds.rows()));
    put_u32(out, static_cast<std::uint32_t>(ds.cols()));
    put_u32(out, static_cast<std::uint32_t>(ds.n_classes()));
    for (const auto &name : ds.class_names) {
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out += name;
    }
    for (int y : ds.labels) {
        put_u32(out, static_cast<std::uint32_t>(y));
    }
    const auto count = static_cast<std::size_t>(ds.features.size());
    for (std::size_t i = 0; i < count; ++i) {
        put_u32(out, std::bit_cast<std::uint32_t>(ds.features.data()[i]));
    }
    return out;
}

EmbeddingDataset decode_embedding(std::string_view bytes) {
    Reader r(bytes);
    const auto magic = r.take(4, "magic");
    if (magic != std::string_view(kMagic, 4)) {
        throw format_error("bad magic: not an SGVF embedding file");
    }
    const auto version = r.u16("version");
    if (version != kVersion) {
        throw format_error(fmt::format("unsupported SGVF version {}", version));
    }
    const std::uint64_t n = r.u32("row count");
    const std::uint64_t p = r.u32("feature count");
    const std::uint64_t c = r.u32("class count");
    if (n == 0 || p == 0 || c < 2) {
        throw format_error(fmt::format("invalid header shape n={}, p={}, c={}", n, p, c));
    }
    if (c > n) {
        throw format_error(fmt::format("header declares {} classes for {} rows", c, n));
    }

    EmbeddingDataset ds;
    ds.class_names.reserve(c);
    for (std::uint64_t k = 0; k < c; ++k) {
        const auto len = r.u16("class name length");
        ds.class_names.emplace_back(r.take(len, "class name"));
    }

    const std::uint64_t payload = 4 * n + 4 * n * p;
    if (r.remaining() < payload) {
        throw truncation_error(fmt::format("payload truncated: header declares {} bytes of labels and features, {} present",
                                           payload, r.remaining()));
    }
    if (r.remaining() > payload) {
        throw format_error(fmt::format("{} trailing bytes after payload", r.remaining() - payload));
    }

    ds.labels.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto y = r.u32("label");
        if (y >= c) {
            throw format_error(fmt::format("row {} has label {} outside [0, {})", i, y, c));
        }
        ds.labels[i] = static_cast<int>(y);
    }
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::uint64_t i = 0; i < n * p; ++i) {
        ds.features.data()[i] = std::bit_cast<float>(r.u32("feature"));
    }
    try {
        check_invariants(ds);
    } catch (const data_error &e) {
        // Structural inconsistencies point at a damaged header; value problems stay data errors.
        const std::string what = e.what();
        if (what.rfind("non-finite", 0) == 0) {
            throw;
        }
        throw format_error(what);
    }
    return ds;
}

EmbeddingDataset read_embedding_file(const std::filesystem::path &path) {
    auto ds = decode_embedding(read_all(path));
    ds.provenance = "file:" + path.string();
    return ds;
}

void write_embedding_file(const EmbeddingDataset &dataset, const std::filesystem::path &path) {
    write_all(path, encode_embedding(dataset));
}

EmbeddingDataset read_embedding_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error(fmt::format("cannot open '{}' for reading", path.string()));
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw format_error("empty CSV file");
    }
    const auto header_fields = std::count(line.begin(), line.end(), ',');
    if (line.rfind("label,", 0) != 0 || header_fields < 1) {
        throw format_error("CSV header must start with 'label,f0'");
    }
    const auto p = static_cast<Eigen::Index>(header_fields);

    std::vector<std::string> names;
    std::vector<float> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        names.push_back(field);
        Eigen::Index count = 0;
        while (std::getline(row, field, ',')) {
            char *end = nullptr;
            const float v = std::strtof(field.c_str(), &end);
            if (end == field.c_str()) {
                throw format_error(fmt::format("line {}: cannot parse '{}' as a number", line_no, field));
            }
            values.push_back(v);
            ++count;
        }
        if (count != p) {
            throw format_error(fmt::format("line {}: expected {} features, found {}", line_no, p, count));
        }
    }
    FeatureMatrix features(static_cast<Eigen::Index>(names.size()), p);
    std::copy(values.begin(), values.end(), features.data());
    return dataset_from_named_rows(std::move(features), names, "csv:" + path.string());
}

void write_embedding_csv(const EmbeddingDataset &ds, const std::filesystem::path &path) {
    check_invariants(ds);
    std::string out = "label";
    for (std::size_t j = 0; j < ds.cols(); ++j) {
        out += fmt::format(",f{}", j);
    }
    out += '\n';
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        out += ds.class_names[static_cast<std::size_t>(ds.labels[i])];
        for (std::size_t j = 0; j < ds.cols(); ++j) {
            // %.9g round-trips every float exactly.
            out += fmt::format(",{:.9g}", ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out += '\n';
    }
    write_all(path, out);
}

ValidationReport validate_dataset(const EmbeddingDataset &ds) {
    ValidationReport report;
    report.rows = ds.rows();
    report.cols = ds.cols();
    const std::size_t c = ds.n_classes();
    if (report.rows == 0 || report.cols == 0) {
        report.issues.push_back("dataset is empty");
    }
    if (c < 2) {
        report.issues.push_back(fmt::format("need at least 2 classes, have {}", c));
    }
    if (ds.labels.size() != report.rows) {
        report.issues.push_back(fmt::format("{} labels for {} rows", ds.labels.size(), report.rows));
    }
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        if (ds.labels[i] < 0 || static_cast<std::size_t>(ds.labels[i]) >= c) {
            report.issues.push_back(fmt::format("row {} has label {} outside [0, {})", i, ds.labels[i], c));
            break;
        }
    }
    report.class_counts = class_counts(ds.labels, c);
    for (std::size_t k = 0; k < c; ++k) {
        if (report.class_counts[k] == 0) {
            report.issues.push_back(fmt::format("class {} has no rows", k));
        }
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
            const double v = ds.features(i, j);
            if (!std::isfinite(v)) {
                ++report.non_finite_count;
                continue;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            if (v < 0.0) {
                if (report.negative_count == 0) {
                    report.first_negative_column = static_cast<long>(j);
                }
                ++report.negative_count;
            }
        }
    }
    report.min_value = std::isfinite(lo) ? lo : 0.0;
    report.max_value = std::isfinite(hi) ? hi : 0.0;
    report.chi2_eligible = report.negative_count == 0 && report.non_finite_count == 0;

    // Modal count, ties toward the larger count.
    std::map<std::size_t, std::size_t> frequency;
    for (auto count : report.class_counts) {
        ++frequency[count];
    }
    std::size_t modal = 0;
    std::size_t best = 0;
    for (const auto &[count, times] : frequency) {
        if (times >= best) {
            best = times;
            modal = count;
        }
    }
    for (std::size_t k = 0; k < c; ++k) {
        if (report.class_counts[k] != modal) {
            report.unbalanced_classes.push_back(static_cast<int>(k));
        }
    }
    report.balanced = c > 0 && report.unbalanced_classes.empty();
    return report;
}

FeatureMask::FeatureMask(std::vector<int> selected, std::size_t n_features)
    : selected_(std::move(selected)), n_features_(n_features) {
    if (selected_.size() > n_features_) {
        throw argument_error(fmt::format("mask selects {} of {} features", selected_.size(), n_features_));
    }
    for (std::size_t i = 0; i < selected_.size(); ++i) {
        const int idx = selected_[i];
        if (idx < 0 || static_cast<std::size_t>(idx) >= n_features_) {
            throw argument_error(fmt::format("mask index {} outside [0, {})", idx, n_features_));
        }
        if (i > 0 && selected_[i - 1] >= idx) {
            throw argument_error("mask indices must be strictly increasing");
        }
    }
}

FeatureMask FeatureMask::all(std::size_t n_features) {
    std::vector<int> idx(n_features);
    for (std::size_t j = 0; j < n_features; ++j) {
        idx[j] = static_cast<int>(j);
    }
    return FeatureMask(std::move(idx), n_features);
}

Matrix FeatureMask::apply(const Matrix &x) const {
    if (static_cast<std::size_t>(x.cols()) != n_features_) {
        throw argument_error(fmt::format("mask built for {} features applied to {} columns", n_features_, x.cols()));
    }
    Matrix out(x.rows(), static_cast<Eigen::Index>(selected_.size()));
    for (std::size_t j = 0; j < selected_.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = x.col(selected_[j]);
    }
    return out;
}

void write_mask(const FeatureMask &mask, const std::filesystem::path &path) {
    std::string out;
    for (int idx : mask.indices()) {
        out += fmt::format("{}\n", idx);
    }
    write_all(path, out);
}

FeatureMask read_mask(const std::filesystem::path &path, std::size_t n_features) {
    std::ifstream in(path);
    if (!in) {
        throw io_error(fmt::format("cannot open '{}' for reading", path.string()));
    }
    std::vector<int> idx;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        char *end = nullptr;
        const long v = std::strtol(line.c_str(), &end, 10);
        if (end == line.c_str() || *end != '\0') {
            throw format_error(fmt::format("mask line '{}' is not an integer", line));
        }
        idx.push_back(static_cast<int>(v));
    }
    return FeatureMask(std::move(idx), n_features);
}

}  // namespace sigsel
