#include "cli.hpp"

#include "sigsel/classifiers.hpp"
#include "sigsel/dataset.hpp"
#include "sigsel/error.hpp"
#include "sigsel/evaluation.hpp"
#include "sigsel/grid.hpp"
#include "sigsel/rng.hpp"
#include "sigsel/selectors.hpp"
#include "sigsel/synthdata.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sigsel::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
    std::string input;
    std::string output;
    std::string output_dir;
    std::string config;
    std::uint64_t seed = 7;

    // synth
    int classes = 20;
    int per_class = 30;
    int dims = 1280;
    int informative = 64;
    double separation = 4.0;

    // selection and evaluation
    std::string method = "nca";
    std::string selector = "none";
    std::string selectors = "chi2,mi,nca";
    std::string k_list = "200,300,400,500";
    std::size_t k = 0;
    std::string classifier = "svm_rbf";
    std::string classifiers = "svm_rbf,svm_poly,svm_linear,knn,dtree,lda,gnb";
    std::string mask;
    std::string scores;
    int folds = 5;
    int jobs = 1;
    bool resume = false;
    bool no_baseline = false;

    // hyperparameters
    ClassifierConfig clf;
    std::string multiclass = "ovo";
    double svm_gamma = 0.0;
    int max_depth = -1;
    PipelineConfig pipeline;
    double nca_lambda = 0.0;
    std::string averaging = "weighted";
};

class Logger {
  public:
    explicit Logger(std::ostream &err) : err_(err) {}
    void operator()(const std::string &line) {
        err_ << line << '\n';
        if (file_) *file_ << line << '\n';
    }
    void tee(const fs::path &path) { file_.emplace(path); }

  private:
    std::ostream &err_;
    std::optional<std::ofstream> file_;
};

std::vector<std::string> split(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<std::size_t> parse_k_list(const std::string &s) {
    std::vector<std::size_t> out;
    for (const auto &item : split(s)) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != item.size() || v < 1) throw argument_error(fmt::format("invalid k value '{}'", item));
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw argument_error("empty k list");
    return out;
}

bool has_flag(const std::vector<std::string> &args, const std::string &flag) {
    for (const auto &a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
}

/// Appends `--key value` for every config-file entry not already given on the command line.
std::vector<std::string> merge_config_file(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw io_error(fmt::format("cannot open config file '{}'", path));
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw format_error(fmt::format("config file '{}': {}", path, e.what()));
    }
    if (!doc.is_object()) throw format_error(fmt::format("config file '{}' must hold a JSON object", path));
    const std::vector<std::string> given = args;
    for (const auto &[key, value] : doc.items()) {
        const std::string flag = "--" + key;
        if (key == "config" || has_flag(given, flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto &v : value) {
                if (!joined.empty()) joined += ',';
                joined += v.is_string() ? v.get<std::string>() : v.dump();
            }
            args.insert(args.end(), {flag, joined});
        } else if (value.is_string()) {
            args.insert(args.end(), {flag, value.get<std::string>()});
        } else if (value.is_number()) {
            args.insert(args.end(), {flag, value.dump()});
        } else {
            throw format_error(fmt::format("config key '{}' has an unsupported value", key));
        }
    }
    return args;
}

EmbeddingDataset load(const std::string &path) {
    if (fs::path(path).extension() == ".csv") return read_embedding_csv(path);
    return read_embedding_file(path);
}

void add_hyperparameters(CLI::App *sub, Options &o) {
    sub->add_option("--svm-c", o.clf.svm.C, "SVM box constraint");
    sub->add_option("--svm-tol", o.clf.svm.tol, "SMO stopping tolerance");
    sub->add_option("--svm-max-passes", o.clf.svm.max_passes, "SMO budget in sweeps of m updates");
    sub->add_option("--svm-gamma", o.svm_gamma, "kernel gamma (default: 1/(p * mean variance))");
    sub->add_option("--svm-degree", o.clf.svm.degree, "polynomial degree");
    sub->add_option("--svm-coef0", o.clf.svm.coef0, "polynomial offset");
    sub->add_option("--svm-multiclass", o.multiclass, "ovo or ovr")->check(CLI::IsMember({"ovo", "ovr"}));
    sub->add_option("--knn-k", o.clf.knn.k, "neighbours for KNN");
    sub->add_option("--dtree-max-depth", o.max_depth, "tree depth limit (default: none)");
    sub->add_option("--gnb-var-smoothing", o.clf.gnb.var_smoothing, "GNB variance smoothing");
    sub->add_option("--lda-svd-tol", o.clf.lda.svd_tol, "LDA pseudo-inverse cutoff");
    sub->add_option("--nca-sigma", o.pipeline.nca.sigma, "NCA kernel width");
    sub->add_option("--nca-lambda", o.nca_lambda, "NCA penalty (default: 1/n)");
    sub->add_option("--nca-max-iters", o.pipeline.nca.max_iters, "NCA iteration limit");
    sub->add_option("--nca-step", o.pipeline.nca.initial_step, "NCA initial step");
    sub->add_option("--nca-tol", o.pipeline.nca.objective_tol, "NCA objective tolerance");
    sub->add_option("--mi-bins", o.pipeline.mi.bins, "MI quantile bins");
    sub->add_option("--averaging", o.averaging, "weighted or macro")->check(CLI::IsMember({"weighted", "macro"}));
}

/// Folds flag-only settings into the library config structs.
void resolve(CLI::App *sub, Options &o) {
    o.clf.svm.multiclass = o.multiclass == "ovr" ? Multiclass::ovr : Multiclass::ovo;
    if (sub->count("--svm-gamma")) o.clf.svm.gamma = o.svm_gamma;
    if (sub->count("--dtree-max-depth")) o.clf.dtree.max_depth = o.max_depth;
    if (sub->count("--nca-lambda")) o.pipeline.nca.lambda = o.nca_lambda;
    o.pipeline.averaging = parse_averaging(o.averaging);
    o.pipeline.nca.seed = derive_seed(o.seed, "selectors", "nca");
    o.clf.validate();
}

std::string describe_classifier(const ClassifierConfig &c) {
    return fmt::format("svm(C={}, tol={}, max_passes={}, gamma={}, degree={}, coef0={}, multiclass={}) knn(k={}) "
                       "dtree(max_depth={}) gnb(var_smoothing={}) lda(svd_tol={})",
                       c.svm.C, c.svm.tol, c.svm.max_passes, c.svm.gamma ? fmt::format("{}", *c.svm.gamma) : "auto",
                       c.svm.degree, c.svm.coef0, c.svm.multiclass == Multiclass::ovo ? "ovo" : "ovr", c.knn.k,
                       c.dtree.max_depth ? std::to_string(*c.dtree.max_depth) : "none", c.gnb.var_smoothing,
                       c.lda.svd_tol);
}

std::string describe_pipeline(const PipelineConfig &p) {
    return fmt::format("nca(sigma={}, lambda={}, max_iters={}, step={}, tol={}) mi(bins={}) averaging={}", p.nca.sigma,
                       p.nca.lambda ? fmt::format("{}", *p.nca.lambda) : "1/n", p.nca.max_iters, p.nca.initial_step,
                       p.nca.objective_tol, p.mi.bins, to_string(p.averaging));
}

FeatureScores score_full(const EmbeddingDataset &ds, SelectorMethod method, const PipelineConfig &pc) {
    const Matrix raw = ds.features.cast<double>();
    if (method == SelectorMethod::chi2) return chi2_scores(raw, ds.labels);
    const Matrix z = Standardizer::fit(raw).transform(raw);
    if (method == SelectorMethod::mi) return mi_scores(z, ds.labels, pc.mi);
    return nca_fit(z, ds.labels, pc.nca);
}

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw io_error(fmt::format("cannot write '{}'", path.string()));
}

std::string read_text(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(fmt::format("cannot open '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_synth(Options &o, Logger &log) {
    SynthConfig cfg;
    cfg.n_classes = o.classes;
    cfg.per_class = o.per_class;
    cfg.p = o.dims;
    cfg.informative = o.informative;
    cfg.separation = o.separation;
    cfg.seed = o.seed;
    log(fmt::format("synth: classes={} per_class={} dims={} informative={} separation={} seed={}", cfg.n_classes,
                    cfg.per_class, cfg.p, cfg.informative, cfg.separation, cfg.seed));
    write_embedding_file(generate_synthetic_dataset(cfg), o.output);
    log(fmt::format("wrote {}", o.output));
    return exit_ok;
}

int run_validate(Options &o, std::ostream &out, Logger &log) {
    log(fmt::format("validate: input={}", o.input));
    const auto r = validate_dataset(load(o.input));
    out << fmt::format("rows: {}\ncolumns: {}\nclasses: {}\n", r.rows, r.cols, r.class_counts.size());
    out << fmt::format("value range: [{}, {}]\n", r.min_value, r.max_value);
    out << fmt::format("negative values: {}", r.negative_count);
    if (r.first_negative_column >= 0) out << fmt::format(" (first in column {})", r.first_negative_column);
    out << fmt::format("\nnon-finite values: {}\n", r.non_finite_count);
    out << fmt::format("balanced: {}\nchi2 eligible: {}\n", r.balanced ? "yes" : "no", r.chi2_eligible ? "yes" : "no");
    for (int c : r.unbalanced_classes) {
        out << fmt::format("unbalanced class {}: {} rows\n", c, r.class_counts[static_cast<std::size_t>(c)]);
    }
    for (const auto &issue : r.issues) out << "issue: " << issue << '\n';
    return r.valid() ? exit_ok : exit_data;
}

int run_select(Options &o, std::ostream &out, Logger &log) {
    const auto method = parse_selector_method(o.method);
    log(fmt::format("select: input={} method={} k={} seed={}", o.input, o.method, o.k, o.seed));
    log(describe_pipeline(o.pipeline));
    const auto ds = load(o.input);
    const auto scores = score_full(ds, method, o.pipeline);
    if (!o.scores.empty()) write_scores(scores, o.scores);
    const auto mask = select_top_k(scores, o.k == 0 ? ds.cols() : o.k);
    if (!o.mask.empty()) {
        write_mask(mask, o.mask);
    } else {
        for (int i : mask.indices()) out << i << '\n';
    }
    return exit_ok;
}

int run_fit(Options &o, std::ostream &out, Logger &log) {
    o.clf.family = parse_family(o.classifier);
    log(fmt::format("fit: input={} classifier={} mask={} seed={}", o.input, o.classifier,
                    o.mask.empty() ? "all" : o.mask, o.seed));
    log(describe_classifier(o.clf));
    const auto ds = load(o.input);
    const auto mask = o.mask.empty() ? FeatureMask::all(ds.cols()) : read_mask(o.mask, ds.cols());
    Matrix x = mask.apply(ds.features.cast<double>());
    if (o.clf.family != Family::dtree) x = Standardizer::fit(x).transform(x);
    const auto model = fit(o.clf, x, ds.labels);
    const auto pred = model.predict(x);
    const auto m = compute_metrics(confusion_matrix(ds.labels, pred, ds.n_classes()), o.pipeline.averaging);
    out << fmt::format("training accuracy: {:.6f}\n", m.accuracy);
    if (!model.all_converged()) log("warning: SMO iteration budget exhausted for at least one subproblem");
    write_text(o.output, model.serialize());
    log(fmt::format("wrote {}", o.output));
    return exit_ok;
}

std::string csv_line(const MetricRow &r) {
    return fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.selector, r.k, to_string(r.classifier),
                       r.fold < 0 ? std::string("mean") : std::to_string(r.fold), r.metrics.accuracy,
                       r.metrics.precision, r.metrics.recall, r.metrics.f1);
}

int run_evaluate(Options &o, std::ostream &out, Logger &log) {
    o.clf.family = parse_family(o.classifier);
    const auto selector = parse_selector_choice(o.selector);
    log(fmt::format("evaluate: input={} selector={} k={} classifier={} folds={} seed={}", o.input, o.selector, o.k,
                    o.classifier, o.folds, o.seed));
    log(describe_classifier(o.clf));
    log(describe_pipeline(o.pipeline));
    const auto ds = load(o.input);
    const auto plan = make_stratified_folds(ds.labels, o.folds, derive_seed(o.seed, "evaluation", "folds"));
    std::vector<MetricRow> rows;
    out << "selector,k,classifier,fold,accuracy,precision,recall,f1\n";
    for (int f = 0; f < o.folds; ++f) {
        rows.push_back(run_pipeline_fold(ds, plan, f, selector, o.k, o.clf, o.pipeline));
        out << csv_line(rows.back());
    }
    out << csv_line(mean_row(rows));
    return exit_ok;
}

int run_grid(Options &o, Logger &log) {
    GridConfig cfg;
    cfg.seed = o.seed;
    cfg.n_folds = o.folds;
    cfg.selectors.clear();
    for (const auto &s : split(o.selectors)) cfg.selectors.push_back(parse_selector_method(s));
    cfg.k_values = parse_k_list(o.k_list);
    cfg.classifiers.clear();
    for (const auto &c : split(o.classifiers)) cfg.classifiers.push_back(parse_family(c));
    cfg.include_baseline = !o.no_baseline;
    cfg.classifier = o.clf;
    cfg.pipeline = o.pipeline;
    cfg.jobs = o.jobs;
    cfg.full_data_masks = true;
    if (cfg.jobs < 1) throw argument_error("--jobs must be at least 1");

    const fs::path dir(o.output_dir);
    fs::create_directories(dir / "masks");
    const fs::path cache = dir / "cache";
    if (!o.resume) fs::remove_all(cache);
    cfg.cache_dir = cache;
    log.tee(dir / "log.txt");
    log(fmt::format("grid: input={} output_dir={} resume={} jobs={}", o.input, o.output_dir, o.resume, o.jobs));
    log(describe(cfg));

    const auto ds = load(o.input);
    log(fmt::format("dataset: {} rows, {} columns, {} classes", ds.rows(), ds.cols(), ds.n_classes()));
    GridStats stats;
    const auto report = run_experiment_grid(ds, cfg, &stats, [&](const std::string &line) { log(line); });
    write_text(dir / "report.csv", report_to_csv(report));
    write_text(dir / "report.md", report_to_markdown(report));
    for (const auto &[key, mask] : report.full_masks) {
        write_mask(mask, dir / "masks" / fmt::format("{}_{}.txt", key.first, key.second));
    }
    log(fmt::format("wrote {} mean rows to {}", report.mean_rows().size(), (dir / "report.csv").string()));
    return exit_ok;
}

int run_report(Options &o, std::ostream &out, Logger &log) {
    log(fmt::format("report: input={}", o.input));
    const auto md = report_to_markdown(report_from_csv(read_text(o.input)));
    if (o.output.empty()) {
        out << md;
    } else {
        write_text(o.output, md);
    }
    return exit_ok;
}

int default_jobs() {
    if (const char *env = std::getenv("SIGSELECT_JOBS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) return v;
        } catch (const std::exception &) {
        }
    }
    return 1;
}

}  // namespace

int cli_main(const std::vector<std::string> &raw_args, std::ostream &out, std::ostream &err) {
    Options o;
    o.jobs = default_jobs();
    Logger log(err);

    CLI::App app("Feature selection and classifier evaluation on signature embeddings", "sigsel");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every subcommand");

    auto add_seed = [&](CLI::App *sub) {
        sub->add_option("--seed", o.seed, "root seed");
        sub->add_option("--config", o.config, "JSON file with flag values; explicit flags win");
    };

    auto *synth = app.add_subcommand("synth", "generate a synthetic embedding dataset");
    synth->add_option("--output,-o", o.output, "output .sgvf file")->required();
    synth->add_option("--classes", o.classes, "number of classes");
    synth->add_option("--per-class", o.per_class, "rows per class");
    synth->add_option("--dims", o.dims, "feature dimension");
    synth->add_option("--informative", o.informative, "columns carrying class signal");
    synth->add_option("--separation", o.separation, "class-mean separation in noise units");
    add_seed(synth);

    auto *validate = app.add_subcommand("validate", "check a dataset and print a report");
    validate->add_option("--input,-i", o.input, "dataset (.sgvf or .csv)")->required();
    add_seed(validate);

    auto *select = app.add_subcommand("select", "score features on the whole dataset and emit the top-k mask");
    select->add_option("--input,-i", o.input, "dataset (.sgvf or .csv)")->required();
    select->add_option("--method", o.method, "chi2, mi or nca");
    select->add_option("--k", o.k, "features to keep (default: all)");
    select->add_option("--scores", o.scores, "write per-feature scores here");
    select->add_option("--mask", o.mask, "write the mask here instead of stdout");
    add_hyperparameters(select, o);
    add_seed(select);

    auto *fitcmd = app.add_subcommand("fit", "train one classifier on the whole dataset");
    fitcmd->add_option("--input,-i", o.input, "dataset (.sgvf or .csv)")->required();
    fitcmd->add_option("--classifier", o.classifier, "classifier family");
    fitcmd->add_option("--mask", o.mask, "feature mask file (default: all features)");
    fitcmd->add_option("--output,-o", o.output, "model file")->required();
    add_hyperparameters(fitcmd, o);
    add_seed(fitcmd);

    auto *evaluate = app.add_subcommand("evaluate", "cross-validate one selector/k/classifier cell");
    evaluate->add_option("--input,-i", o.input, "dataset (.sgvf or .csv)")->required();
    evaluate->add_option("--selector", o.selector, "none, chi2, mi or nca");
    evaluate->add_option("--k", o.k, "features to keep (ignored for none)");
    evaluate->add_option("--classifier", o.classifier, "classifier family");
    evaluate->add_option("--folds", o.folds, "number of folds");
    add_hyperparameters(evaluate, o);
    add_seed(evaluate);

    auto *grid = app.add_subcommand("grid", "run the full selector x k x classifier experiment");
    grid->add_option("--input,-i", o.input, "dataset (.sgvf or .csv)")->required();
    grid->add_option("--output-dir,-o", o.output_dir, "directory for report.csv, report.md, masks/, log.txt")
        ->required();
    grid->add_option("--selectors", o.selectors, "comma-separated selectors");
    grid->add_option("--k", o.k_list, "comma-separated k values");
    grid->add_option("--classifiers", o.classifiers, "comma-separated classifier families");
    grid->add_option("--folds", o.folds, "number of folds");
    grid->add_option("--jobs,-j", o.jobs, "worker threads (default: $SIGSELECT_JOBS or 1)");
    grid->add_flag("--resume", o.resume, "reuse cached cells from an earlier run in the same directory");
    grid->add_flag("--no-baseline", o.no_baseline, "skip the no-selection rows");
    add_hyperparameters(grid, o);
    add_seed(grid);

    auto *report = app.add_subcommand("report", "render a report CSV as markdown tables");
    report->add_option("--input,-i", o.input, "report.csv")->required();
    report->add_option("--output,-o", o.output, "markdown file (default: stdout)");
    add_seed(report);

    try {
        std::vector<std::string> args = merge_config_file(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError &e) {
        app.exit(e, err, err);
        err << app.help();
        return exit_usage;
    } catch (const argument_error &e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const error &e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    }

    try {
        CLI::App *sub = app.get_subcommands().front();
        if (sub != synth && sub != validate && sub != report) resolve(sub, o);
        if (sub == synth) return run_synth(o, log);
        if (sub == validate) return run_validate(o, out, log);
        if (sub == select) return run_select(o, out, log);
        if (sub == fitcmd) return run_fit(o, out, log);
        if (sub == evaluate) return run_evaluate(o, out, log);
        if (sub == grid) return run_grid(o, log);
        return run_report(o, out, log);
    } catch (const argument_error &e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const error &e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const fs::filesystem_error &e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    }
}

}  // namespace sigsel::cli
