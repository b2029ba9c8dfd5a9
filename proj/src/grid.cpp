#include "sigsel/grid.hpp"

#include "sigsel/error.hpp"
#include "sigsel/rng.hpp"

#include <fmt/core.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace sigsel {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)> &task) {
    const auto workers = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr failure;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    try {
                        task(i);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (i < failed_index) {
                            failed_index = i;
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

std::vector<MetricRow> ExperimentReport::mean_rows() const {
    std::vector<MetricRow> out;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [](const auto &r) { return r.fold < 0; });
    return out;
}

namespace {

std::string describe_classifier(const ClassifierConfig &c) {
    return fmt::format("svm(C={:.17g},tol={:.17g},passes={},gamma={},degree={},coef0={:.17g},mc={})|knn(k={})|"
                       "dtree(split={},depth={})|gnb(vs={:.17g})|lda(tol={:.17g})",
                       c.svm.C, c.svm.tol, c.svm.max_passes,
                       c.svm.gamma ? fmt::format("{:.17g}", *c.svm.gamma) : std::string("auto"), c.svm.degree,
                       c.svm.coef0, c.svm.multiclass == Multiclass::ovo ? "ovo" : "ovr", c.knn.k,
                       c.dtree.min_samples_split, c.dtree.max_depth ? std::to_string(*c.dtree.max_depth) : "none",
                       c.gnb.var_smoothing, c.lda.svd_tol);
}

std::string describe_pipeline(const PipelineConfig &p) {
    return fmt::format("nca(sigma={:.17g},lambda={},iters={},step={:.17g},tol={:.17g})|mi(bins={})|avg={}",
                       p.nca.sigma, p.nca.lambda ? fmt::format("{:.17g}", *p.nca.lambda) : std::string("1/n"),
                       p.nca.max_iters, p.nca.initial_step, p.nca.objective_tol, p.mi.bins, to_string(p.averaging));
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::uint64_t key_hash(std::string_view key) { return mix64(fnv1a(key)); }

std::optional<std::vector<double>> read_cached(const std::filesystem::path &path, std::size_t expected) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        char *end = nullptr;
        const double v = std::strtod(line.c_str(), &end);
        if (end == line.c_str() || *end != '\0') return std::nullopt;
        values.push_back(v);
    }
    if (values.size() != expected) return std::nullopt;
    return values;
}

void write_cached(const std::filesystem::path &path, const std::vector<double> &values) {
    std::string body;
    for (double v : values) body += fmt::format("{:.17g}\n", v);
    // Write-then-rename so an interrupted run never leaves a partial entry.
    auto tmp = path;
    tmp += fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw io_error(fmt::format("cannot write cache entry '{}'", tmp.string()));
        out << body;
    }
    std::filesystem::rename(tmp, path);
}

FoldData full_data_split(const EmbeddingDataset &dataset) {
    FoldData d;
    d.train_raw = dataset.features.cast<double>();
    d.train_labels = dataset.labels;
    d.standardizer = Standardizer::fit(d.train_raw);
    d.train_std = d.standardizer.transform(d.train_raw);
    return d;
}

struct Cell {
    SelectorChoice selector;
    std::size_t selector_slot = 0;  // index into config.selectors when selector is set
    std::size_t k = 0;
    Family family = Family::svm_rbf;
    int fold = 0;
};

}  // namespace

std::string describe(const GridConfig &config) {
    std::vector<std::string_view> sel;
    for (auto s : config.selectors) sel.push_back(to_string(s));
    std::vector<std::string_view> clf;
    for (auto f : config.classifiers) clf.push_back(to_string(f));
    return fmt::format("seed={} folds={} selectors=[{}] k=[{}] classifiers=[{}] baseline={} {} {}", config.seed,
                       config.n_folds, fmt::join(sel, ","), fmt::join(config.k_values, ","), fmt::join(clf, ","),
                       config.include_baseline, describe_classifier(config.classifier),
                       describe_pipeline(config.pipeline));
}

ExperimentReport run_experiment_grid(const EmbeddingDataset &dataset, const GridConfig &config, GridStats *stats,
                                     const GridLogger &log) {
    check_invariants(dataset);
    config.classifier.validate();
    const std::size_t p = dataset.cols();
    for (auto k : config.k_values) {
        if (k < 1 || k > p) throw argument_error(fmt::format("k={} outside [1, {}]", k, p));
    }
    if (config.classifiers.empty()) throw argument_error("grid needs at least one classifier");
    auto say = [&](const std::string &msg) {
        if (log) log(msg);
    };

    GridStats local;
    const std::string data_hash = hex(fnv1a(encode_embedding(dataset)));
    const std::uint64_t fold_seed = derive_seed(config.seed, "evaluation", "folds");
    const FoldPlan plan = make_stratified_folds(dataset.labels, config.n_folds, fold_seed);
    if (config.cache_dir) std::filesystem::create_directories(*config.cache_dir);
    const std::string classifier_desc = describe_classifier(config.classifier);
    const std::string pipeline_desc = describe_pipeline(config.pipeline);

    std::vector<FoldData> folds(static_cast<std::size_t>(config.n_folds));
    parallel_for(folds.size(), config.jobs,
                 [&](std::size_t f) { folds[f] = prepare_fold(dataset, plan, static_cast<int>(f)); });

    // Phase 1: selector scores per (selector, fold), plus the full-data split when requested.
    const std::size_t score_folds = folds.size() + (config.full_data_masks ? 1 : 0);
    const std::size_t n_score_tasks = config.selectors.size() * score_folds;
    std::vector<FeatureScores> scores(n_score_tasks);
    std::optional<FoldData> full;
    if (config.full_data_masks && !config.selectors.empty()) full = full_data_split(dataset);
    std::atomic<std::size_t> scores_cached{0};
    say(fmt::format("scoring {} selector x split combinations", n_score_tasks));
    parallel_for(n_score_tasks, config.jobs, [&](std::size_t t) {
        const std::size_t s = t / score_folds;
        const std::size_t f = t % score_folds;
        const bool is_full = f == folds.size();
        const SelectorMethod method = config.selectors[s];
        const std::string key =
            fmt::format("scores|v1|data={}|seed={}|folds={}|split={}|selector={}|{}", data_hash, config.seed,
                        config.n_folds, is_full ? std::string("full") : std::to_string(f), to_string(method),
                        pipeline_desc);
        std::optional<std::filesystem::path> path;
        if (config.cache_dir) {
            path = *config.cache_dir / fmt::format("scores-{}.txt", hex(key_hash(key)));
            if (auto cached = read_cached(*path, p)) {
                scores[t] = FeatureScores{std::move(*cached), method};
                ++scores_cached;
                return;
            }
        }
        PipelineConfig pc = config.pipeline;
        pc.nca.seed = derive_seed(config.seed, "selectors", "nca", f);
        scores[t] = score_training_split(is_full ? *full : folds[f], method, pc);
        if (path) write_cached(*path, scores[t].scores);
    });
    local.scores_cached = scores_cached;
    local.scores_computed = n_score_tasks - scores_cached;

    ExperimentReport report;
    if (config.full_data_masks) {
        for (std::size_t s = 0; s < config.selectors.size(); ++s) {
            for (auto k : config.k_values) {
                report.full_masks.emplace(std::make_pair(std::string(to_string(config.selectors[s])), k),
                                          select_top_k(scores[s * score_folds + folds.size()], k));
            }
        }
    }

    // Phase 2: classifier cells in canonical order.
    std::vector<Cell> cells;
    auto add_group = [&](SelectorChoice sel, std::size_t slot, std::size_t k) {
        for (Family fam : config.classifiers) {
            for (int f = 0; f < config.n_folds; ++f) cells.push_back({sel, slot, k, fam, f});
        }
    };
    if (config.include_baseline) add_group(std::nullopt, 0, p);
    for (std::size_t s = 0; s < config.selectors.size(); ++s) {
        for (auto k : config.k_values) add_group(config.selectors[s], s, k);
    }
    local.cells_total = cells.size();

    std::vector<Metrics> results(cells.size());
    std::atomic<std::size_t> cells_cached{0};
    std::atomic<std::size_t> done{0};
    std::mutex log_mu;
    say(fmt::format("evaluating {} cells", cells.size()));
    parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
        const Cell &cell = cells[i];
        ClassifierConfig cc = config.classifier;
        cc.family = cell.family;
        const std::string key = fmt::format("cell|v1|data={}|seed={}|folds={}|fold={}|selector={}|k={}|clf={}|{}|{}",
                                            data_hash, config.seed, config.n_folds, cell.fold,
                                            to_string(cell.selector), cell.k, to_string(cell.family), classifier_desc,
                                            pipeline_desc);
        std::optional<std::filesystem::path> path;
        if (config.cache_dir) {
            path = *config.cache_dir / fmt::format("cell-{}.txt", hex(key_hash(key)));
            if (auto cached = read_cached(*path, 4)) {
                const auto &v = *cached;
                results[i] = {v[0], v[1], v[2], v[3]};
                ++cells_cached;
                ++done;
                return;
            }
        }
        const FoldData &fold = folds[static_cast<std::size_t>(cell.fold)];
        FeatureMask mask = FeatureMask::all(p);
        if (cell.selector) {
            mask = select_top_k(scores[cell.selector_slot * score_folds + static_cast<std::size_t>(cell.fold)], cell.k);
        }
        results[i] = evaluate_masked(fold, mask, cc, dataset.n_classes(), config.pipeline.averaging);
        if (path) {
            const auto &m = results[i];
            write_cached(*path, {m.accuracy, m.precision, m.recall, m.f1});
        }
        const auto finished = ++done;
        if (log && finished % 50 == 0) {
            std::lock_guard lock(log_mu);
            log(fmt::format("{}/{} cells done", finished, cells.size()));
        }
    });
    local.cells_cached = cells_cached;
    local.cells_computed = cells.size() - cells_cached;

    for (std::size_t start = 0; start < cells.size(); start += static_cast<std::size_t>(config.n_folds)) {
        std::vector<MetricRow> group;
        for (int f = 0; f < config.n_folds; ++f) {
            const Cell &cell = cells[start + static_cast<std::size_t>(f)];
            group.push_back({std::string(to_string(cell.selector)), cell.k, cell.family, cell.fold,
                             results[start + static_cast<std::size_t>(f)]});
        }
        for (const auto &r : group) report.rows.push_back(r);
        report.rows.push_back(mean_row(group));
    }
    say(fmt::format("grid finished: {} cells computed, {} from cache", local.cells_computed, local.cells_cached));
    if (stats) *stats = local;
    return report;
}

std::string report_to_csv(const ExperimentReport &report) {
    std::string out = "selector,k,classifier,fold,accuracy,precision,recall,f1\n";
    for (const auto &r : report.rows) {
        out += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.selector, r.k, to_string(r.classifier),
                           r.fold < 0 ? std::string("mean") : std::to_string(r.fold), r.metrics.accuracy,
                           r.metrics.precision, r.metrics.recall, r.metrics.f1);
    }
    return out;
}

ExperimentReport report_from_csv(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || line != "selector,k,classifier,fold,accuracy,precision,recall,f1") {
        throw format_error("report CSV must start with 'selector,k,classifier,fold,accuracy,precision,recall,f1'");
    }
    ExperimentReport report;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 8) {
            throw format_error(fmt::format("report line {}: expected 8 fields, found {}", line_no, fields.size()));
        }
        auto number = [&](const std::string &s) {
            char *end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0') {
                throw format_error(fmt::format("report line {}: '{}' is not a number", line_no, s));
            }
            return v;
        };
        MetricRow r;
        r.selector = fields[0];
        parse_selector_choice(r.selector);
        r.k = static_cast<std::size_t>(number(fields[1]));
        r.classifier = parse_family(fields[2]);
        r.fold = fields[3] == "mean" ? -1 : static_cast<int>(number(fields[3]));
        r.metrics = {number(fields[4]), number(fields[5]), number(fields[6]), number(fields[7])};
        report.rows.push_back(std::move(r));
    }
    return report;
}

const std::vector<ReferenceValue> &reference_values() {
    static const std::vector<ReferenceValue> values = {
        {"nca", 300, Family::svm_rbf, 97.70, "best reported result overall"},
        {"nca", 500, Family::lda, 93.10, "also described in the published discussion as the highest accuracy"},
        {"none", 0, Family::lda, 92.2, "best reported result without feature selection"},
    };
    return values;
}

std::string report_to_markdown(const ExperimentReport &report) {
    const auto means = report.mean_rows();
    std::vector<std::string> selectors;
    std::vector<Family> families;
    for (const auto &r : means) {
        if (std::find(selectors.begin(), selectors.end(), r.selector) == selectors.end()) selectors.push_back(r.selector);
        if (std::find(families.begin(), families.end(), r.classifier) == families.end()) families.push_back(r.classifier);
    }
    auto find = [&](const std::string &sel, std::size_t k, Family fam) -> const MetricRow * {
        for (const auto &r : means) {
            if (r.selector == sel && r.k == k && r.classifier == fam) return &r;
        }
        return nullptr;
    };
    auto title = [](const std::string &sel) -> std::string {
        if (sel == "none") return "No feature selection";
        if (sel == "chi2") return "Chi2 feature selection";
        if (sel == "mi") return "Mutual information feature selection";
        if (sel == "nca") return "NCA feature selection";
        return sel;
    };
    static constexpr std::pair<const char *, double Metrics::*> metric_rows[] = {
        {"accuracy", &Metrics::accuracy},
        {"precision", &Metrics::precision},
        {"recall", &Metrics::recall},
        {"f1-score", &Metrics::f1},
    };

    std::string out = "# Cross-validated results (mean over folds, percent)\n";
    for (const auto &sel : selectors) {
        std::vector<std::size_t> ks;
        for (const auto &r : means) {
            if (r.selector == sel && std::find(ks.begin(), ks.end(), r.k) == ks.end()) ks.push_back(r.k);
        }
        std::sort(ks.rbegin(), ks.rend());
        out += fmt::format("\n## {}\n\n| Features | Metric |", title(sel));
        for (auto f : families) out += fmt::format(" {} |", display_name(f));
        out += "\n|---|---|";
        for (std::size_t i = 0; i < families.size(); ++i) out += "---|";
        out += '\n';
        for (auto k : ks) {
            bool first = true;
            for (const auto &[name, member] : metric_rows) {
                out += fmt::format("| {} | {} |", first ? std::to_string(k) : std::string(), name);
                first = false;
                for (auto f : families) {
                    const auto *row = find(sel, k, f);
                    out += row ? fmt::format(" {:.2f} |", 100.0 * (row->metrics.*member)) : std::string(" - |");
                }
                out += '\n';
            }
        }
        std::string notes;
        for (const auto &ref : reference_values()) {
            if (ref.selector != sel) continue;
            for (auto k : ks) {
                if (ref.k != 0 && ref.k != k) continue;
                const auto *row = find(sel, k, ref.classifier);
                if (!row) continue;
                notes += fmt::format("- {} features, {}: published accuracy {:.2f}% ({}); measured here {:.2f}%\n", k,
                                     display_name(ref.classifier), ref.accuracy_percent, ref.note,
                                     100.0 * row->metrics.accuracy);
            }
        }
        if (!notes.empty()) {
            out += "\nReference values from the original 12,600-image corpus (not reproducible on other data):\n\n";
            out += notes;
        }
    }
    return out;
}

}  // namespace sigsel
