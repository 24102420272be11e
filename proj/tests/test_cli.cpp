#include "alevs/datasets.hpp"

#include "oracles.hpp"

#include <catch2/catch.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

fs::path scratch_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() /
                 ("alevs_cli_" + tag + "_" + std::to_string(static_cast<unsigned>(::getpid())));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunResult run_cli(const std::string& args, const std::string& tag) {
    const fs::path out_file = scratch_dir("out_" + tag) / "output.txt";
    const std::string cmd = std::string(ALEVS_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("run writes one curve file per strategy plus the summary") {
    const fs::path out = scratch_dir("run_happy");
    const RunResult r = run_cli("run --synthetic two-gaussians:n=24,d=3,sep=3 "
                                "--strategies alevs,random --budget 3 --trials 2 --k 2 --seed 7 --out " +
                                    out.string(),
                                "run_happy");
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(out / "two-gaussians" / "alevs.csv"));
    REQUIRE(fs::exists(out / "two-gaussians" / "random.csv"));
    REQUIRE(fs::exists(out / "two-gaussians" / "summary.json"));
    REQUIRE_FALSE(fs::exists(out / "two-gaussians" / "uncertainty.csv"));
}

TEST_CASE("invalid flag values exit with code 2 and name the flag") {
    const fs::path out = scratch_dir("run_badk");
    const RunResult r = run_cli("run --synthetic two-gaussians:n=24,d=3,sep=3 --k 0 --budget 2 "
                                "--trials 1 --out " +
                                    out.string(),
                                "run_badk");
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.output.find("--k") != std::string::npos);
}

TEST_CASE("unknown flags and strategies are rejected") {
    const RunResult unknown = run_cli("run --synthetic two-gaussians:n=24,d=3 --no-such-flag", "unknown");
    REQUIRE(unknown.exit_code == 2);
    const RunResult strat = run_cli("run --synthetic two-gaussians:n=24,d=3 --strategies alevs,bogus",
                                    "badstrat");
    REQUIRE(strat.exit_code == 2);
    REQUIRE(strat.output.find("bogus") != std::string::npos);
}

TEST_CASE("a dataset reference is required") {
    const RunResult r = run_cli("run --budget 1 --trials 1", "nodataset");
    REQUIRE(r.exit_code == 2);
}

TEST_CASE("identical run invocations produce byte-identical files") {
    const fs::path out_a = scratch_dir("det_a");
    const fs::path out_b = scratch_dir("det_b");
    const std::string common = "run --synthetic two-gaussians:n=20,d=2,sep=2 --strategies "
                               "alevs,uncertainty,random,leverage-all --budget 3 --trials 2 --k 2 --seed 11 --out ";
    REQUIRE(run_cli(common + out_a.string(), "det_a").exit_code == 0);
    REQUIRE(run_cli(common + out_b.string(), "det_b").exit_code == 0);
    for (const char* name : {"alevs.csv", "uncertainty.csv", "random.csv", "leverage-all.csv", "summary.json"}) {
        const std::string a = slurp(out_a / "two-gaussians" / name);
        REQUIRE_FALSE(a.empty());
        REQUIRE(a == slurp(out_b / "two-gaussians" / name));
    }
}

TEST_CASE("worker count does not change the output bytes") {
    const fs::path out_a = scratch_dir("w1");
    const fs::path out_b = scratch_dir("w4");
    const std::string common = "run --synthetic two-gaussians:n=20,d=2,sep=2 --strategies alevs,random "
                               "--budget 2 --trials 4 --k 2 --seed 3 ";
    REQUIRE(run_cli(common + "--workers 1 --out " + out_a.string(), "w1").exit_code == 0);
    REQUIRE(run_cli(common + "--workers 4 --out " + out_b.string(), "w4").exit_code == 0);
    for (const char* name : {"alevs.csv", "random.csv"})
        REQUIRE(slurp(out_a / "two-gaussians" / name) == slurp(out_b / "two-gaussians" / name));
}

TEST_CASE("leverage on a full-rank dataset prints all ones and the matching footer") {
    const fs::path dir = scratch_dir("lev");
    const fs::path csv = dir / "tiny.csv";
    std::ofstream(csv) << "1,0,+1\n0,1,-1\n1,1,+1\n";
    const RunResult r = run_cli("leverage --dataset " + csv.string() + " --k 3 --kernel linear", "lev");
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    std::stringstream ss(r.output);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(ss, line)) lines.push_back(line);
    REQUIRE(lines.size() == 6); // header, 3 rows, sum, effective_k
    REQUIRE(lines[0] == "id\tleverage");
    for (int i = 1; i <= 3; ++i) REQUIRE(lines[static_cast<std::size_t>(i)].find("\t1") != std::string::npos);
    REQUIRE(lines[4] == "# sum\t3");
    REQUIRE(lines[5] == "# effective_k\t3");
}

TEST_CASE("leverage on a diagonal-kernel file reproduces the known scores") {
    // rows chosen so the linear kernel is diag(4, 2, 1)
    const fs::path dir = scratch_dir("lev_diag");
    const fs::path csv = dir / "diag.csv";
    std::ofstream(csv) << "2,0,0,+1\n0,1.4142135623730951,0,-1\n0,0,1,+1\n";
    const RunResult r = run_cli("leverage --dataset " + csv.string() + " --k 2 --kernel linear",
                                "lev_diag");
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    std::stringstream ss(r.output);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(ss, line)) lines.push_back(line);
    REQUIRE(lines.size() == 6);
    REQUIRE(lines[1] == "0\t1");
    REQUIRE(lines[2] == "1\t1");
    REQUIRE(lines[3] == "2\t0");
    REQUIRE(lines[4] == "# sum\t2");
    REQUIRE(lines[5] == "# effective_k\t2");
}

TEST_CASE("leverage scores printed by the cli match an independent oracle") {
    const fs::path dir = scratch_dir("lev_oracle");
    const fs::path csv = dir / "random20.csv";
    {
        std::ofstream out(csv);
        alevs::Rng rng(515);
        for (int i = 0; i < 20; ++i) {
            for (int j = 0; j < 3; ++j) out << alevs::fmt_double(rng.gaussian()) << ",";
            out << (i % 2 == 0 ? "+1" : "-1") << "\n";
        }
    }
    const int k = 4;
    const RunResult r = run_cli("leverage --dataset " + csv.string() + " --k 4 --kernel rbf --sigma auto",
                                "lev_oracle");
    REQUIRE(r.exit_code == 0);

    std::map<int, double> printed;
    std::stringstream ss(r.output);
    std::string line;
    std::getline(ss, line); // header
    while (std::getline(ss, line)) {
        if (line.rfind("#", 0) == 0) break;
        std::stringstream ls(line);
        int id;
        double score;
        ls >> id >> score;
        printed[id] = score;
    }
    REQUIRE(printed.size() == 20);

    // rebuild the kernel independently: exhaustive median, loop RBF entries,
    // power-iteration leverage
    const alevs::Dataset ds = alevs::load_delimited(csv.string());
    const double sigma = oracle::all_pairs_median_distance(ds.features);
    alevs::Matrix km(20, 20);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
            km(i, j) = oracle::rbf_entry(oracle::row_of(ds.features, i),
                                         oracle::row_of(ds.features, j), sigma);
    alevs::Rng orng(99);
    const std::vector<double> expected = oracle::leverage_from_power(km, k, orng);
    for (int id = 0; id < 20; ++id)
        REQUIRE(printed.at(id) == Approx(expected[static_cast<std::size_t>(id)]).margin(1e-6));
}

TEST_CASE("leverage output is reproducible") {
    const std::string args = "leverage --synthetic two-gaussians:n=16,d=3,sep=2 --k 4 --seed 5";
    const RunResult a = run_cli(args, "lev_rep_a");
    const RunResult b = run_cli(args, "lev_rep_b");
    REQUIRE(a.exit_code == 0);
    REQUIRE(a.output == b.output);
}

TEST_CASE("datasets lists the registry with availability") {
    const RunResult r = run_cli("datasets", "datasets");
    REQUIRE(r.exit_code == 0);
    for (const char* name : {"digit1", "g241c", "g241n", "USPS", "splice", "ringnorm", "spambase"})
        REQUIRE(r.output.find(name) != std::string::npos);
    REQUIRE(r.output.find("1608") != std::string::npos); // letter (DvsP) instances
}

TEST_CASE("selftest passes on a healthy build and reports each check") {
    const RunResult r = run_cli("selftest", "selftest");
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.output.find("PASS eigen-reconstruction") != std::string::npos);
    REQUIRE(r.output.find("PASS leverage-sum") != std::string::npos);
    REQUIRE(r.output.find("PASS svm-dual-optimality") != std::string::npos);
}

TEST_CASE("the perturbed eigensolver hook makes selftest fail") {
    const RunResult r = run_cli("selftest --perturb-eigen", "selftest_perturb");
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.output.find("FAIL eigen-reconstruction") != std::string::npos);
}

TEST_CASE("selftest output is identical across runs") {
    const RunResult a = run_cli("selftest", "selftest_rep_a");
    const RunResult b = run_cli("selftest", "selftest_rep_b");
    REQUIRE(a.output == b.output);
}

TEST_CASE("help enumerates the documented flags") {
    const RunResult r = run_cli("run --help", "help");
    REQUIRE(r.exit_code == 0);
    for (const char* flag : {"--dataset", "--synthetic", "--strategies", "--budget", "--trials", "--k",
                             "--kernel", "--sigma", "--svm-c", "--seed", "--out", "--workers"})
        REQUIRE(r.output.find(flag) != std::string::npos);
}
