// alevs command-line front-end: run experiments, dump leverage scores, list
// the benchmark registry, and self-check the numerical cores.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include "alevs/classifier.hpp"
#include "alevs/common.hpp"
#include "alevs/datasets.hpp"
#include "alevs/eigensolver.hpp"
#include "alevs/harness.hpp"
#include "alevs/kernel.hpp"
#include "alevs/strategies.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace alevs;

struct DatasetOptions {
    std::string dataset;   // file path or registry name
    std::string synthetic; // name:key=val,... spec
    int label_col = -1;    // -1 = last column
    std::string delimiter = ",";
    std::string data_dir;  // registry lookup; defaults to ALEVS_DATA_DIR
};

void add_dataset_options(CLI::App& cmd, DatasetOptions& opts) {
    auto* ds = cmd.add_option("--dataset", opts.dataset,
                              "Dataset file path or benchmark registry name");
    auto* sy = cmd.add_option("--synthetic", opts.synthetic,
                              "Synthetic spec, e.g. two-gaussians:n=200,d=10,sep=3[,seed=1]");
    ds->excludes(sy);
    sy->excludes(ds);
    cmd.add_option("--label-col", opts.label_col,
                   "Label column for delimited files; negative counts from the end")
        ->capture_default_str();
    cmd.add_option("--delimiter", opts.delimiter, "Field delimiter for delimited files")
        ->capture_default_str();
    cmd.add_option("--data-dir", opts.data_dir,
                   "Benchmark data directory (default: $ALEVS_DATA_DIR)");
}

// two-gaussians:n=500,d=20,sep=1.5[,seed=1] -> Dataset. n is the total count
// and must be even.
Dataset parse_synthetic(const std::string& spec) {
    const std::size_t colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    if (name != "two-gaussians")
        throw std::invalid_argument("--synthetic: unknown generator '" + name +
                                    "' (supported: two-gaussians)");
    int n = 200, d = 10;
    double sep = 3.0;
    std::uint64_t seed = 1;
    if (colon != std::string::npos) {
        std::stringstream ss(spec.substr(colon + 1));
        std::string kv;
        while (std::getline(ss, kv, ',')) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--synthetic: expected key=value, got '" + kv + "'");
            const std::string key = kv.substr(0, eq);
            const std::string val = kv.substr(eq + 1);
            try {
                if (key == "n")
                    n = std::stoi(val);
                else if (key == "d")
                    d = std::stoi(val);
                else if (key == "sep")
                    sep = std::stod(val);
                else if (key == "seed")
                    seed = std::stoull(val);
                else
                    throw std::invalid_argument("--synthetic: unknown key '" + key + "'");
            } catch (const std::invalid_argument&) {
                throw;
            } catch (const std::exception&) {
                throw std::invalid_argument("--synthetic: bad value for '" + key + "': '" + val + "'");
            }
        }
    }
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("--synthetic: n must be a positive even total, got " +
                                    std::to_string(n));
    return synth_two_gaussians(n / 2, d, sep, seed);
}

// Sparse index:value lines are recognized by their first data line.
bool looks_sparse(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string tok;
        if (!(ss >> tok)) continue;
        while (ss >> tok)
            if (tok.find(':') != std::string::npos) return true;
        return false;
    }
    return false;
}

struct LoadedDataset {
    Dataset ds;
    std::string source;
};

LoadedDataset load_dataset(const DatasetOptions& opts) {
    if (!opts.synthetic.empty()) return {parse_synthetic(opts.synthetic), opts.synthetic};
    if (opts.dataset.empty())
        throw std::invalid_argument("one of --dataset or --synthetic is required");
    if (opts.delimiter.size() != 1)
        throw std::invalid_argument("--delimiter must be a single character");

    if (std::filesystem::exists(opts.dataset)) {
        Dataset ds = looks_sparse(opts.dataset)
                         ? load_sparse_index(opts.dataset)
                         : load_delimited(opts.dataset, opts.label_col, opts.delimiter[0]);
        return {std::move(ds), opts.dataset};
    }
    if (find_benchmark(opts.dataset)) {
        const std::string dir = opts.data_dir.empty() ? data_dir_from_env() : opts.data_dir;
        return {load_benchmark(opts.dataset, dir), opts.dataset};
    }
    throw std::invalid_argument("--dataset: '" + opts.dataset +
                                "' is neither an existing file nor a registry name");
}

std::vector<std::string> parse_strategies(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        const auto& tags = known_strategies();
        if (std::find(tags.begin(), tags.end(), tok) == tags.end())
            throw std::invalid_argument("--strategies: unknown strategy '" + tok + "'");
        out.push_back(tok);
    }
    return out;
}

int cmd_run(const DatasetOptions& ds_opts, const std::string& strategies_csv, int budget, int trials,
            int k, const std::string& kernel, const std::string& sigma, double svm_c,
            std::uint64_t seed, const std::string& out_dir, int workers, double test_fraction,
            int seed_labels, bool no_stratify, bool normalized) {
    ExperimentConfig cfg;
    cfg.strategies = parse_strategies(strategies_csv);
    cfg.query_budget = budget;
    cfg.n_trials = trials;
    cfg.k = k;
    try {
        cfg.leverage_kind = kernel_kind_from_string(kernel);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("--kernel: ") + e.what());
    }
    try {
        cfg.leverage_sigma = sigma_policy_from_string(sigma);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("--sigma: ") + e.what());
    }
    cfg.svm_c = svm_c;
    cfg.master_seed = seed;
    cfg.workers = workers;
    cfg.test_fraction = test_fraction;
    cfg.n_seed_labels = seed_labels;
    cfg.stratified = !no_stratify;
    cfg.normalized_leverage = normalized;
    if (cfg.k < 1) throw std::invalid_argument("--k must be >= 1");
    if (cfg.query_budget < 0) throw std::invalid_argument("--budget must be >= 0");
    if (cfg.n_trials < 1) throw std::invalid_argument("--trials must be >= 1");
    if (cfg.workers < 1) throw std::invalid_argument("--workers must be >= 1");
    if (!(cfg.svm_c > 0.0)) throw std::invalid_argument("--svm-c must be positive");

    const LoadedDataset loaded = load_dataset(ds_opts);
    try {
        validate_config(cfg, loaded.ds);
    } catch (const std::exception& e) {
        throw std::invalid_argument(e.what()); // config-vs-data problems are exit 2
    }

    const ExperimentResult res = run_experiment(cfg, loaded.ds);
    const auto files = write_results(res.curves, dataset_meta(loaded.ds, loaded.source), cfg, out_dir);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : files) std::cout << f << "\n";
    return 0;
}

int cmd_leverage(const DatasetOptions& ds_opts, int k, const std::string& kernel,
                 const std::string& sigma, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("--k must be >= 1");
    KernelConfig cfg;
    try {
        cfg.kind = kernel_kind_from_string(kernel);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("--kernel: ") + e.what());
    }
    const LoadedDataset loaded = load_dataset(ds_opts);

    std::vector<int> ids(static_cast<std::size_t>(loaded.ds.size()));
    for (int i = 0; i < loaded.ds.size(); ++i) ids[static_cast<std::size_t>(i)] = i;
    const FeatureBlock block = make_block(loaded.ds.features, ids);
    if (cfg.kind == KernelKind::rbf) {
        SigmaPolicy pol;
        try {
            pol = sigma_policy_from_string(sigma);
        } catch (const std::exception& e) {
            throw std::invalid_argument(std::string("--sigma: ") + e.what());
        }
        cfg.sigma = pol.auto_median ? median_sigma(block, 200, derive_seed(seed, 3)) : pol.value;
    }

    const LeverageScores lev = leverage_scores(build_kernel(block, cfg), k);
    std::printf("id\tleverage\n");
    for (int id : detail::rank_ids_by_score(lev.scores))
        std::printf("%d\t%s\n", id, fmt_double(lev.scores.at(id)).c_str());
    std::printf("# sum\t%s\n", fmt_double(lev.sum()).c_str());
    std::printf("# effective_k\t%d\n", lev.rank_k);
    return 0;
}

int cmd_datasets(const std::string& data_dir_flag) {
    const std::string dir = data_dir_flag.empty() ? data_dir_from_env() : data_dir_flag;
    std::printf("%-14s %10s %10s  %s\n", "name", "instances", "features", "file");
    for (const auto& b : benchmark_table()) {
        const auto file = find_benchmark_file(b.name, dir);
        std::printf("%-14s %10d %10d  %s\n", b.name.c_str(), b.instances, b.features,
                    file ? file->c_str() : "(absent)");
    }
    if (dir.empty())
        std::printf("# set ALEVS_DATA_DIR or pass --data-dir to locate benchmark files\n");
    return 0;
}

// Embedded oracle checks. The projected-gradient dual bound is implemented
// here, independent of the SMO path it certifies.
namespace selfcheck {

double dual_objective(const Matrix& k, const std::vector<int>& y, const std::vector<double>& a) {
    const int n = static_cast<int>(y.size());
    double obj = 0.0;
    for (int i = 0; i < n; ++i) obj += a[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            obj -= 0.5 * a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(i)] *
                   y[static_cast<std::size_t>(j)] * k(i, j);
    return obj;
}

// Euclidean projection onto {0 <= a <= C, y'a = 0} by bisection on the
// equality multiplier.
std::vector<double> project(std::vector<double> z, const std::vector<int>& y, double c) {
    const auto value = [&](double nu) {
        double s = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i)
            s += y[i] * std::clamp(z[i] - nu * y[i], 0.0, c);
        return s;
    };
    double lo = -1e6, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (value(mid) > 0.0 ? lo : hi) = mid;
    }
    const double nu = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::clamp(z[i] - nu * y[i], 0.0, c);
    return z;
}

double oracle_dual_opt(const Matrix& k, const std::vector<int>& y, double c) {
    const int n = static_cast<int>(y.size());
    double lip = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) lip += std::abs(k(i, j));
    std::vector<double> a(static_cast<std::size_t>(n), 0.0), prev = a;
    double best = dual_objective(k, y, a);
    double momentum = 1.0;
    for (int it = 0; it < 20000; ++it) {
        std::vector<double> grad(static_cast<std::size_t>(n), 1.0); // of the max objective
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                grad[static_cast<std::size_t>(i)] -= y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] *
                                                     k(i, j) * a[static_cast<std::size_t>(j)];
        std::vector<double> z(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] + grad[static_cast<std::size_t>(i)] / lip;
        std::vector<double> next = project(std::move(z), y, c);
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        std::vector<double> extrap(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            extrap[static_cast<std::size_t>(i)] = next[static_cast<std::size_t>(i)] +
                                                  (momentum - 1.0) / next_momentum *
                                                      (next[static_cast<std::size_t>(i)] - prev[static_cast<std::size_t>(i)]);
        prev = next;
        a = project(std::move(extrap), y, c);
        momentum = next_momentum;
        best = std::max(best, dual_objective(k, y, next));
    }
    return best;
}

bool check_eigen_reconstruction(bool perturb) {
    Rng rng(2024);
    const int n = 30;
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian();
    const Matrix k = g * g.transpose();
    EigenDecomposition dec = eig_sym(k);
    if (perturb) dec.vectors(0, 0) += 1e-3; // negative-path hook
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    const double recon = (k - dec.vectors * dec.values.asDiagonal() * dec.vectors.transpose())
                             .cwiseAbs()
                             .maxCoeff();
    const double ortho = (dec.vectors.transpose() * dec.vectors - Matrix::Identity(n, n))
                             .cwiseAbs()
                             .maxCoeff();
    return recon <= 1e-8 * scale && ortho <= 1e-8;
}

bool check_leverage_sum() {
    Rng rng(77);
    const int n = 25, k_rank = 7;
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian();
    const Matrix k = g * g.transpose();
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    const LeverageScores lev = leverage_scores(eig_sym(k), k_rank, ids);
    return std::abs(lev.sum() - k_rank) <= 1e-8;
}

bool check_svm_dual() {
    Rng rng(4096);
    const int n = 6, d = 2;
    Matrix x(n, d);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] = i % 2 == 0 ? 1 : -1;
        for (int j = 0; j < d; ++j)
            x(i, j) = rng.gaussian() + (y[static_cast<std::size_t>(i)] > 0 ? 1.0 : -1.0);
    }
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    const FeatureBlock block(x, ids);

    SvmConfig cfg;
    cfg.kind = KernelKind::linear;
    cfg.c = 1.0;
    cfg.kkt_tol = 1e-4;
    const TrainedModel model = train(block, y, cfg);
    const Matrix k = linear_kernel(block).entries;
    const double oracle = oracle_dual_opt(k, y, cfg.c);
    return std::abs(model.dual_objective - oracle) <= 1e-4;
}

} // namespace selfcheck

int cmd_selftest(bool perturb_eigen) {
    struct Check {
        const char* name;
        bool ok;
    };
    const Check checks[] = {
        {"eigen-reconstruction", selfcheck::check_eigen_reconstruction(perturb_eigen)},
        {"leverage-sum", selfcheck::check_leverage_sum()},
        {"svm-dual-optimality", selfcheck::check_svm_dual()},
    };
    bool all_ok = true;
    for (const auto& c : checks) {
        std::printf("%s %s\n", c.ok ? "PASS" : "FAIL", c.name);
        all_ok = all_ok && c.ok;
    }
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ALEVS: pool-based active learning by statistical leverage sampling"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run an active-learning experiment and write result tables");
    DatasetOptions run_ds;
    add_dataset_options(*run, run_ds);
    std::string strategies = "alevs,uncertainty,random,leverage-all";
    int budget = 50, trials = 10, k = 20, workers = 1, seed_labels = 4;
    std::string kernel = "rbf", sigma = "auto", out_dir = "results";
    double svm_c = 1.0, test_fraction = 0.5;
    std::uint64_t seed = 0;
    bool no_stratify = false, normalized = false;
    run->add_option("--strategies", strategies, "Comma-separated strategy list")->capture_default_str();
    run->add_option("--budget", budget, "Number of label queries per trial")->capture_default_str();
    run->add_option("--trials", trials, "Number of repeated trials")->capture_default_str();
    run->add_option("--k", k, "Leverage rank parameter")->capture_default_str();
    run->add_option("--kernel", kernel, "Leverage kernel: linear|rbf")->capture_default_str();
    run->add_option("--sigma", sigma, "Leverage RBF scale: auto|VALUE")->capture_default_str();
    run->add_option("--svm-c", svm_c, "SVM box constraint C")->capture_default_str();
    run->add_option("--seed", seed, "Master seed")->capture_default_str();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--workers", workers, "Concurrent trial workers")->capture_default_str();
    run->add_option("--test-fraction", test_fraction, "Held-out test fraction")->capture_default_str();
    run->add_option("--seed-labels", seed_labels, "Initially labeled instances")->capture_default_str();
    run->add_flag("--no-stratify", no_stratify, "Draw seed labels without class balancing");
    run->add_flag("--normalized-leverage", normalized,
                  "Rescale partition scores by size/k before the argmax");

    // leverage
    auto* lev = app.add_subcommand("leverage", "Print leverage scores over a whole dataset");
    DatasetOptions lev_ds;
    add_dataset_options(*lev, lev_ds);
    int lev_k = 20;
    std::string lev_kernel = "rbf", lev_sigma = "auto";
    std::uint64_t lev_seed = 0;
    lev->add_option("--k", lev_k, "Leverage rank parameter")->capture_default_str();
    lev->add_option("--kernel", lev_kernel, "Kernel: linear|rbf")->capture_default_str();
    lev->add_option("--sigma", lev_sigma, "RBF scale: auto|VALUE")->capture_default_str();
    lev->add_option("--seed", lev_seed, "Seed for the sigma heuristic subsample")->capture_default_str();

    // datasets
    auto* dsets = app.add_subcommand("datasets", "List the benchmark registry and file availability");
    std::string dsets_dir;
    dsets->add_option("--data-dir", dsets_dir, "Benchmark data directory (default: $ALEVS_DATA_DIR)");

    // selftest
    auto* self = app.add_subcommand("selftest", "Run the embedded numerical oracle checks");
    bool perturb_eigen = false;
    self->add_flag("--perturb-eigen", perturb_eigen,
                   "Inject an eigenvector perturbation (negative-path test hook)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed())
            return cmd_run(run_ds, strategies, budget, trials, k, kernel, sigma, svm_c, seed, out_dir,
                           workers, test_fraction, seed_labels, no_stratify, normalized);
        if (lev->parsed()) return cmd_leverage(lev_ds, lev_k, lev_kernel, lev_sigma, lev_seed);
        if (dsets->parsed()) return cmd_datasets(dsets_dir);
        if (self->parsed()) return cmd_selftest(perturb_eigen);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
