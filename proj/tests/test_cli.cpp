#include "helpers.hpp"

#include "cli.hpp"
#include "sigsel/dataset.hpp"
#include "sigsel/grid.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using sigsel::cli::cli_main;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> small_synth(const std::filesystem::path &path) {
    return {"synth", "-o", path.string(), "--classes", "4", "--per-class", "10", "--dims", "30", "--informative",
            "6", "--separation", "5"};
}

}  // namespace

TEST_CASE("cli: usage errors exit 1 with help text") {
    auto r = run({});
    CHECK(r.code == 1);
    r = run({"frobnicate"});
    CHECK(r.code == 1);
    CHECK(r.err.find("synth") != std::string::npos);
    r = run({"validate", "--input", "x", "--bogus"});
    CHECK(r.code == 1);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli: synth is deterministic and validate reports") {
    testing::TempDir dir("cli_synth");
    CHECK(run({"synth", "-o", (dir / "a.sgvf").string(), "--dims", "50", "--informative", "8", "--seed", "7"}).code ==
          0);
    CHECK(run({"synth", "-o", (dir / "b.sgvf").string(), "--dims", "50", "--informative", "8", "--seed", "7"}).code ==
          0);
    CHECK(slurp(dir / "a.sgvf") == slurp(dir / "b.sgvf"));
    const auto r = run({"validate", "-i", (dir / "a.sgvf").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("rows: 600") != std::string::npos);
    CHECK(r.out.find("chi2 eligible: yes") != std::string::npos);
    CHECK(r.err.find("input=") != std::string::npos);
    CHECK(run({"validate", "-i", (dir / "missing.sgvf").string()}).code == 2);
}

TEST_CASE("cli: chi2 on negative data exits 2 naming the column") {
    testing::TempDir dir("cli_neg");
    sigsel::Rng rng(1);
    auto ds = testing::random_dataset(rng, 20, 5, 2);
    ds.features = ds.features.cwiseAbs();
    ds.features(3, 4) = -1.0f;
    sigsel::write_embedding_file(ds, dir / "neg.sgvf");
    const auto r = run({"select", "-i", (dir / "neg.sgvf").string(), "--method", "chi2", "--k", "2"});
    CHECK(r.code == 2);
    CHECK(r.err.find("column 4") != std::string::npos);
}

TEST_CASE("cli: select, fit, evaluate and report") {
    testing::TempDir dir("cli_flow");
    const auto data = (dir / "d.sgvf").string();
    REQUIRE(run(small_synth(dir / "d.sgvf")).code == 0);

    auto r = run({"select", "-i", data, "--method", "mi", "--k", "6", "--mask", (dir / "m.txt").string(), "--scores",
                  (dir / "s.txt").string()});
    REQUIRE(r.code == 0);
    CHECK(sigsel::read_mask(dir / "m.txt", 30).size() == 6);

    r = run({"fit", "-i", data, "--classifier", "lda", "--mask", (dir / "m.txt").string(), "-o",
             (dir / "model.bin").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("training accuracy") != std::string::npos);
    CHECK(std::filesystem::file_size(dir / "model.bin") > 0);

    r = run({"evaluate", "-i", data, "--selector", "nca", "--k", "6", "--classifier", "knn", "--knn-k", "3"});
    CHECK(r.code == 0);
    CHECK(r.out.find("nca,6,knn,mean,") != std::string::npos);
    CHECK(r.err.find("knn(k=3)") != std::string::npos);
    CHECK(r.err.find("seed=7") != std::string::npos);

    CHECK(run({"evaluate", "-i", data, "--selector", "nca", "--k", "31"}).code == 1);
    CHECK(run({"evaluate", "-i", data, "--svm-c", "-1"}).code == 1);
    CHECK(run({"evaluate", "-i", data, "--classifier", "forest"}).code == 1);
}

TEST_CASE("cli: grid writes every artifact and resumes to the same report") {
    testing::TempDir dir("cli_grid");
    const auto data = (dir / "d.sgvf").string();
    REQUIRE(run(small_synth(dir / "d.sgvf")).code == 0);
    const std::vector<std::string> grid = {"grid",           "-i",  data, "--selectors", "nca,chi2,mi",
                                           "--k",            "5,10,15,20", "--seed",      "7",
                                           "--nca-max-iters", "10"};
    auto first = grid;
    first.insert(first.end(), {"-o", (dir / "a").string()});
    REQUIRE(run(first).code == 0);
    const auto csv = slurp(dir / "a" / "report.csv");
    CHECK(sigsel::report_from_csv(csv).mean_rows().size() == 91);
    CHECK(std::filesystem::exists(dir / "a" / "report.md"));
    CHECK(std::filesystem::exists(dir / "a" / "masks" / "nca_20.txt"));
    CHECK(std::filesystem::exists(dir / "a" / "masks" / "chi2_5.txt"));
    CHECK(slurp(dir / "a" / "log.txt").find("seed=7") != std::string::npos);

    auto resumed = first;
    resumed.push_back("--resume");
    const auto r = run(resumed);
    REQUIRE(r.code == 0);
    CHECK(r.err.find("0 cells computed") != std::string::npos);
    CHECK(slurp(dir / "a" / "report.csv") == csv);

    auto second = grid;
    second.insert(second.end(), {"-o", (dir / "b").string(), "--jobs", "2"});
    REQUIRE(run(second).code == 0);
    CHECK(slurp(dir / "b" / "report.csv") == csv);

    const auto md = run({"report", "-i", (dir / "a" / "report.csv").string()});
    CHECK(md.code == 0);
    CHECK(md.out == slurp(dir / "a" / "report.md"));
}

TEST_CASE("cli: config file values apply unless a flag overrides them") {
    testing::TempDir dir("cli_config");
    const auto data = (dir / "d.sgvf").string();
    REQUIRE(run(small_synth(dir / "d.sgvf")).code == 0);
    std::ofstream(dir / "c.json") << R"({"classifier": "knn", "knn-k": 7, "selector": "chi2", "k": 5})";
    auto r = run({"evaluate", "-i", data, "--config", (dir / "c.json").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("chi2,5,knn,mean,") != std::string::npos);
    CHECK(r.err.find("knn(k=7)") != std::string::npos);

    r = run({"evaluate", "-i", data, "--config", (dir / "c.json").string(), "--knn-k", "1"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("knn(k=1)") != std::string::npos);

    std::ofstream(dir / "bad.json") << "{not json";
    CHECK(run({"evaluate", "-i", data, "--config", (dir / "bad.json").string()}).code == 2);
    std::ofstream(dir / "unknown.json") << R"({"no-such-flag": 1})";
    CHECK(run({"evaluate", "-i", data, "--config", (dir / "unknown.json").string()}).code == 1);
}
