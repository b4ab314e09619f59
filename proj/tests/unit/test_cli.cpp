#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "assortinf/cli.hpp"
#include "assortinf/dataset.hpp"
#include "assortinf/experiments.hpp"
#include "assortinf/inference.hpp"

using namespace assortinf;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("assortinf_cli_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(cli({}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    const Run r = cli({"simulate", "--bogus", "1"});
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"experiment", "sideways", "--config", "x"}).code == 1);
}

TEST_CASE("simulate, estimate and test compose into the in-process pipeline") {
    TempDir dir;
    REQUIRE(cli({"simulate", "--n", "8", "--k-star", "5", "--L", "300", "--seed", "21", "--out",
                 dir / "data.json", "--truth", dir / "truth.json"})
                .code == 0);
    const auto truth = read_json(dir / "truth.json");
    CHECK(truth["K_star"] == 5);

    REQUIRE(cli({"estimate", "--dataset", dir / "data.json", "--revenues", dir / "truth.json",
                 "--out", dir / "est.json"})
                .code == 0);
    const Run t = cli({"test", "--dataset", dir / "data.json", "--revenues", dir / "truth.json",
                       "--estimate", dir / "est.json", "--hypothesis", "example1", "--i", "3",
                       "--seed", "5", "--out", dir / "test.json"});
    REQUIRE(t.code == 0);
    const auto rep = read_json(dir / "test.json");

    // Same computation in process.
    const ObservedDataset d = load_dataset(dir / "data.json");
    std::vector<double> rv = truth["revenues"];
    const RevenueVector r(Eigen::Map<Eigen::VectorXd>(rv.data(), static_cast<Eigen::Index>(rv.size())));
    InferenceConfig config;
    config.lambda = default_lambda(8, d.sampling_p(), 300, 1.0);
    const InferenceResult res = run_inference(d, r, config, Rng(5).split(4));
    CHECK(rep["ci"]["k_lower"] == res.ci.k_lower);
    CHECK(rep["ci"]["k_upper"] == res.ci.k_upper);
    CHECK(rep["ci"]["c_w"].get<double>() == res.ci.c_w_used);
    std::vector<double> dh = rep["delta_hat"];
    for (int k = 0; k < 8; ++k) CHECK(dh[static_cast<std::size_t>(k)] == res.gaps.delta_hat[k]);
    const auto est = read_json(dir / "est.json");
    std::vector<double> dh_est = est["delta_hat"];
    CHECK(dh_est == dh);

    // K* = 5 well separated from K0 = {1, 2}.
    CHECK(res.ci.k_lower >= 3);
    CHECK(t.out.find("decision: Reject") != std::string::npos);
    CHECK(rep["decision"] == "Reject");

    // Without --estimate the fit is redone and gives the same answer.
    const Run t2 = cli({"test", "--dataset", dir / "data.json", "--revenues", dir / "truth.json",
                        "--hypothesis", "example1", "--i", "3", "--seed", "5"});
    CHECK(t2.out == t.out);
}

TEST_CASE("test subcommand hypothesis flags") {
    TempDir dir;
    REQUIRE(cli({"simulate", "--n", "6", "--k-star", "3", "--L", "100", "--p", "0.5", "--seed",
                 "2", "--out", dir / "d.json", "--truth", dir / "t.json"})
                .code == 0);
    const std::vector<std::string> base{"test", "--dataset", dir / "d.json", "--revenues",
                                        dir / "t.json", "--B", "50"};
    auto with = [&](std::vector<std::string> extra) {
        std::vector<std::string> a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return cli(a);
    };
    CHECK(with({"--hypothesis", "example2", "--A", "2,4"}).code == 0);
    CHECK(with({"--hypothesis", "example3", "--A", "1-3"}).code == 0);
    CHECK(with({"--hypothesis", "example4", "--A", "1,2", "--q", "50"}).code == 0);
    CHECK(with({"--hypothesis", "example5", "--partition", "1,4;2,5;3,6"}).code == 0);
    CHECK(with({"--hypothesis", "example6", "--partition", "1-3;4-6", "--n0", "2"}).code == 0);
    CHECK(with({"--hypothesis", "k0", "--k0", "2-4"}).code == 0);
    CHECK(with({"--hypothesis", "example5", "--partition", "1,4;2,5"}).code == 1);
    CHECK(with({"--hypothesis", "nonsense"}).code == 1);
    const Run empty = with({"--hypothesis", "example1", "--i", "1"});
    CHECK(empty.code == 0);
    CHECK(empty.out.find("decision: Reject") != std::string::npos);
    CHECK(empty.out.find("K0 is empty") != std::string::npos);
}

TEST_CASE("file and data errors") {
    TempDir dir;
    CHECK(cli({"estimate", "--dataset", dir / "missing.json", "--revenues", dir / "x.json"}).code == 1);
    {
        std::ofstream(dir / "bad.json") << "{\"version\": 1}";
        std::ofstream(dir / "r.json") << "[0, 1]";
    }
    CHECK(cli({"estimate", "--dataset", dir / "bad.json", "--revenues", dir / "r.json"}).code == 1);
    {
        // Product 2 is never offered, so the Hessian is singular.
        std::ofstream(dir / "gap.json")
            << R"({"version":1,"n":2,"L":2,"p":0.5,"seed":null,"sets":[[1]],"choices":[[0,1]]})";
        std::ofstream(dir / "r2.json") << "[0, 2, 1]";
    }
    const Run r = cli({"estimate", "--dataset", dir / "gap.json", "--revenues", dir / "r2.json"});
    CHECK(r.code == 2);
    CHECK(r.err.find("never offered") != std::string::npos);
}

TEST_CASE("experiment subcommand writes the CSV") {
    TempDir dir;
    {
        std::ofstream(dir / "cfg.json")
            << R"({"scenario": {"n": 6, "p": 0.5}, "reps": 3, "B": 50, "L_grid": [40],
                  "K_star_grid": [2, 3]})";
    }
    const Run r = cli({"experiment", "coverage", "--config", dir / "cfg.json", "--out",
                       dir / "cov.csv", "--seed", "4", "--jobs", "2"});
    REQUIRE(r.code == 0);
    std::ifstream in(dir / "cov.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "k_star,L,coverage,reps,mean_width,excluded");
    const Run again = cli({"experiment", "coverage", "--config", dir / "cfg.json", "--out",
                           dir / "cov2.csv", "--seed", "4"});
    REQUIRE(again.code == 0);
    std::ifstream a(dir / "cov.csv"), b(dir / "cov2.csv");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());

    const Run qq = cli({"experiment", "qq", "--config", dir / "cfg.json", "--out", dir / "qq.csv"});
    CHECK(qq.code == 0);
    CHECK(qq.out.find("KS std_delta_1") != std::string::npos);
    CHECK(cli({"experiment", "power", "--config", dir / "cfg.json", "--out", dir / "p.csv"}).code == 1);
    {
        std::ofstream(dir / "fail.json")
            << R"({"scenario": {"n": 6, "p": 0.02}, "reps": 4, "B": 50, "L_grid": [40],
                  "K_star_grid": [2]})";
    }
    CHECK(cli({"experiment", "coverage", "--config", dir / "fail.json", "--out", dir / "f.csv"}).code == 2);
}
