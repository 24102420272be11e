// Experiment loop: per-trial active-learning runs against a simulated perfect
// oracle, aggregation over repeated trials, and plot-ready result files.
#pragma once

#include "alevs/classifier.hpp"
#include "alevs/common.hpp"
#include "alevs/datasets.hpp"
#include "alevs/eigensolver.hpp"
#include "alevs/kernel.hpp"
#include "alevs/strategies.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace alevs {

inline const std::vector<std::string>& known_strategies() {
    static const std::vector<std::string> tags = {"alevs", "uncertainty", "random", "leverage-all"};
    return tags;
}

// Either a fixed bandwidth or the seeded median-distance heuristic resolved
// per trial on the training pool.
struct SigmaPolicy {
    bool auto_median = true;
    double value = 1.0;

    static SigmaPolicy fixed(double v) { return {false, v}; }
    static SigmaPolicy median() { return {true, 1.0}; }
};

inline std::string to_string(const SigmaPolicy& p) { return p.auto_median ? "auto" : fmt_double(p.value); }

inline SigmaPolicy sigma_policy_from_string(const std::string& s) {
    if (s == "auto") return SigmaPolicy::median();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || !(v > 0.0))
        throw std::invalid_argument("sigma must be 'auto' or a positive number, got '" + s + "'");
    return SigmaPolicy::fixed(v);
}

struct ExperimentConfig {
    std::vector<std::string> strategies = known_strategies();
    int query_budget = 50;
    int n_trials = 10;
    int k = 20;
    KernelKind leverage_kind = KernelKind::rbf;
    SigmaPolicy leverage_sigma = SigmaPolicy::median();
    KernelKind svm_kind = KernelKind::rbf;
    SigmaPolicy svm_sigma = SigmaPolicy::median();
    double svm_c = 1.0;
    double kkt_tol = 1e-3;
    int max_passes = 100000;
    double test_fraction = 0.5;
    int n_seed_labels = 4;
    bool stratified = true;
    bool normalized_leverage = false;
    std::uint64_t master_seed = 0;
    int workers = 1;
    int sigma_subsample_cap = 200;
};

inline int train_pool_size(int n, double test_fraction) {
    const int n_test = std::clamp(static_cast<int>(std::llround(n * test_fraction)), 1, n - 1);
    return n - n_test;
}

inline void validate_config(const ExperimentConfig& cfg, const Dataset& ds) {
    if (cfg.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
    if (cfg.k < 1) throw std::invalid_argument("k must be >= 1");
    if (cfg.query_budget < 0) throw std::invalid_argument("query_budget must be >= 0");
    if (cfg.workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (cfg.n_seed_labels < 2) throw std::invalid_argument("n_seed_labels must be >= 2");
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        throw std::invalid_argument("test_fraction must be in (0, 1)");
    if (!(cfg.svm_c > 0.0)) throw std::invalid_argument("svm_c must be positive");
    if (cfg.sigma_subsample_cap < 2) throw std::invalid_argument("sigma_subsample_cap must be >= 2");
    for (const auto& s : cfg.strategies) {
        const auto& tags = known_strategies();
        if (std::find(tags.begin(), tags.end(), s) == tags.end())
            throw std::invalid_argument("unknown strategy '" + s + "'");
    }
    const int pool = train_pool_size(ds.size(), cfg.test_fraction);
    if (cfg.query_budget > pool - cfg.n_seed_labels)
        throw std::invalid_argument("query_budget exceeds the unlabeled pool (" +
                                    std::to_string(pool - cfg.n_seed_labels) + " available)");
}

struct TrialResult {
    std::vector<std::string> strategies;
    std::vector<std::vector<double>> accuracy;     // [strategy][0..budget]
    std::vector<std::vector<int>> labeled_sizes;   // [strategy][0..budget]
    std::vector<std::vector<int>> final_labeled;   // [strategy], sorted
    std::vector<int> train_ids, test_ids, seed_ids;
    std::vector<std::string> warnings;
};

namespace detail {

struct FittedClassifier {
    bool degenerate = false;
    int constant_label = 1;
    TrainedModel model;
};

inline double accuracy_of(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("accuracy_of: size mismatch");
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

} // namespace detail

// One complete active-learning trial. Every strategy starts from the identical
// split and seed labels; the oracle reveals true labels at uniform cost.
inline TrialResult run_trial(const ExperimentConfig& cfg, const Dataset& ds, int trial_index) {
    const std::uint64_t root = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(trial_index));
    const SplitResult sp = split(ds, {cfg.test_fraction, cfg.n_seed_labels, derive_seed(root, 1), cfg.stratified});

    TrialResult result;
    result.strategies = cfg.strategies;
    result.train_ids = sp.train_ids;
    result.test_ids = sp.test_ids;
    result.seed_ids = sp.seed_ids;

    const auto warn = [&](const std::string& msg) { result.warnings.push_back(msg); };

    // every training-side id set goes through this audit: test ids must never
    // reach a kernel, leverage, or SVM computation
    const auto audit_ids = [&](const std::vector<int>& ids) {
        for (int id : ids)
            if (!std::binary_search(sp.train_ids.begin(), sp.train_ids.end(), id))
                throw std::logic_error("leakage audit: id " + std::to_string(id) +
                                       " is outside the training pool");
    };
    const auto train_block = [&](const std::vector<int>& ids) {
        audit_ids(ids);
        return make_block(ds.features, ids);
    };

    const FeatureBlock pool_block = train_block(sp.train_ids);

    const auto resolve_sigma = [&](KernelKind kind, const SigmaPolicy& pol, std::uint64_t tag,
                                   const char* what) {
        if (kind == KernelKind::linear) return 1.0;
        if (!pol.auto_median) return pol.value;
        const MedianSigmaResult r = median_sigma_detail(pool_block, cfg.sigma_subsample_cap, derive_seed(root, tag));
        if (r.degenerate)
            warn(std::string(what) + ": all sampled pairwise distances are zero, sigma fell back to 1.0");
        return r.sigma;
    };
    const KernelConfig lev_cfg{cfg.leverage_kind, resolve_sigma(cfg.leverage_kind, cfg.leverage_sigma, 3, "leverage sigma")};
    SvmConfig svm_cfg;
    svm_cfg.c = cfg.svm_c;
    svm_cfg.kkt_tol = cfg.kkt_tol;
    svm_cfg.max_passes = cfg.max_passes;
    svm_cfg.kind = cfg.svm_kind;
    svm_cfg.sigma = resolve_sigma(cfg.svm_kind, cfg.svm_sigma, 4, "svm sigma");

    // decision values for arbitrary ids (training side or test side)
    const auto decisions_for = [&](const detail::FittedClassifier& clf, const FeatureBlock& queries) {
        if (clf.degenerate)
            return std::vector<double>(static_cast<std::size_t>(queries.size()),
                                       static_cast<double>(clf.constant_label));
        const FeatureBlock support = train_block(clf.model.support_ids);
        return decision_values(clf.model, cross_kernel(queries, support, svm_cfg.kind, svm_cfg.sigma));
    };

    // Platt calibration is refit on the labeled set at every iteration it is
    // needed (the uncertainty strategy)
    const auto fit_classifier = [&](const PoolState& state, bool need_platt) {
        detail::FittedClassifier clf;
        try {
            clf.model = train(train_block(state.labeled_ids), state.labeled_labels, svm_cfg);
            if (!clf.model.converged)
                warn("svm did not converge within max_passes at iteration " +
                     std::to_string(state.iteration));
            if (need_platt) {
                const FeatureBlock labeled = train_block(state.labeled_ids);
                const PlattParams platt = fit_platt(decisions_for(clf, labeled), state.labeled_labels);
                if (!platt.converged)
                    warn("platt fit fell back to (-1, 0) at iteration " + std::to_string(state.iteration));
                clf.model.platt_a = platt.a;
                clf.model.platt_b = platt.b;
            }
        } catch (const SingleClassError& e) {
            clf.degenerate = true;
            clf.constant_label = e.seen_label();
            warn("single-class labeled set at iteration " + std::to_string(state.iteration) +
                 ", using a constant classifier");
        }
        return clf;
    };
    const auto predictions_for = [&](const detail::FittedClassifier& clf, const FeatureBlock& queries) {
        const std::vector<double> f = decisions_for(clf, queries);
        std::vector<int> out(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) out[i] = predict_one(f[i]);
        return out;
    };

    std::vector<int> lev_all_order;
    if (std::find(cfg.strategies.begin(), cfg.strategies.end(), "leverage-all") != cfg.strategies.end())
        lev_all_order = leverage_all_rank(pool_block, cfg.k, lev_cfg); // once per trial

    Rng random_stream(derive_seed(root, 2));

    std::vector<int> seed_labels;
    for (int id : sp.seed_ids) seed_labels.push_back(ds.labels[static_cast<std::size_t>(id)]);
    std::vector<int> initial_unlabeled;
    for (int id : sp.train_ids)
        if (!std::binary_search(sp.seed_ids.begin(), sp.seed_ids.end(), id))
            initial_unlabeled.push_back(id);

    const FeatureBlock test_queries = make_block(ds.features, sp.test_ids);
    std::vector<int> test_labels;
    for (int id : sp.test_ids) test_labels.push_back(ds.labels[static_cast<std::size_t>(id)]);

    for (const std::string& tag : cfg.strategies) {
        PoolState state(sp.seed_ids, seed_labels, initial_unlabeled);
        std::vector<double> acc_series;
        std::vector<int> size_series;
        std::size_t rank_cursor = 0;

        for (int t = 0; t <= cfg.query_budget; ++t) {
            const bool will_query = t < cfg.query_budget;
            const detail::FittedClassifier clf =
                fit_classifier(state, will_query && tag == "uncertainty");
            acc_series.push_back(detail::accuracy_of(predictions_for(clf, test_queries), test_labels));
            size_series.push_back(static_cast<int>(state.labeled_ids.size()));
            if (!will_query) break;

            int chosen = -1;
            if (tag == "alevs") {
                const FeatureBlock unlabeled = train_block(state.unlabeled_ids);
                const std::vector<int> preds = predictions_for(clf, unlabeled);
                std::map<int, int> pred_map;
                for (std::size_t i = 0; i < preds.size(); ++i)
                    pred_map[state.unlabeled_ids[i]] = preds[i];
                const auto [pos, neg] = build_partitions(state, pred_map, ds.features);
                audit_ids(pos.global_ids);
                audit_ids(neg.global_ids);
                chosen = alevs_select(state, pos, neg, cfg.k, lev_cfg, cfg.normalized_leverage).chosen_id;
            } else if (tag == "uncertainty") {
                const PlattParams platt{clf.degenerate ? -1.0 : clf.model.platt_a,
                                        clf.degenerate ? 0.0 : clf.model.platt_b, true};
                const FeatureBlock unlabeled = train_block(state.unlabeled_ids);
                const std::vector<double> f = decisions_for(clf, unlabeled);
                std::map<int, double> post;
                for (std::size_t i = 0; i < f.size(); ++i)
                    post[state.unlabeled_ids[i]] = posterior(platt, f[i]);
                chosen = uncertainty_select(state, post).chosen_id;
            } else if (tag == "random") {
                chosen = random_select(state, random_stream).chosen_id;
            } else { // leverage-all
                while (rank_cursor < lev_all_order.size() && !state.is_unlabeled(lev_all_order[rank_cursor]))
                    ++rank_cursor;
                if (rank_cursor >= lev_all_order.size())
                    throw PoolExhaustedError("leverage-all: ranking exhausted");
                chosen = lev_all_order[rank_cursor];
            }

            if (!state.is_unlabeled(chosen))
                throw std::logic_error("strategy '" + tag + "' chose a labeled id");
            audit_ids({chosen}); // queries must come from the pool
            state.acquire(chosen, ds.labels[static_cast<std::size_t>(chosen)]);
        }

        result.accuracy.push_back(std::move(acc_series));
        result.labeled_sizes.push_back(std::move(size_series));
        std::vector<int> final_ids = state.labeled_ids;
        std::sort(final_ids.begin(), final_ids.end());
        result.final_labeled.push_back(std::move(final_ids));
    }
    return result;
}

struct LearningCurve {
    std::string strategy;
    std::vector<double> mean_accuracy;          // length budget + 1
    std::vector<double> std_error;              // sample stdev / sqrt(n_trials)
    std::vector<std::vector<double>> per_trial; // [trial][point]
};

// Fold per-trial series into mean and standard error per point. A single
// trial has zero standard error by definition.
inline LearningCurve aggregate_curve(const std::string& strategy,
                                     const std::vector<std::vector<double>>& per_trial) {
    if (per_trial.empty()) throw std::invalid_argument("aggregate_curve: no trials");
    const std::size_t len = per_trial.front().size();
    for (const auto& s : per_trial)
        if (s.size() != len) throw std::invalid_argument("aggregate_curve: ragged series");

    LearningCurve curve;
    curve.strategy = strategy;
    curve.per_trial = per_trial;
    const double n = static_cast<double>(per_trial.size());
    for (std::size_t p = 0; p < len; ++p) {
        bool constant = true;
        for (const auto& s : per_trial) constant = constant && s[p] == per_trial.front()[p];
        if (constant) { // identical values carry exactly zero variance
            curve.mean_accuracy.push_back(per_trial.front()[p]);
            curve.std_error.push_back(0.0);
            continue;
        }
        double mean = 0.0;
        for (const auto& s : per_trial) mean += s[p];
        mean /= n;
        double ss = 0.0;
        for (const auto& s : per_trial) ss += (s[p] - mean) * (s[p] - mean);
        curve.mean_accuracy.push_back(mean);
        curve.std_error.push_back(std::sqrt(ss / (n - 1.0)) / std::sqrt(n));
    }
    return curve;
}

struct ExperimentResult {
    std::vector<LearningCurve> curves; // one per configured strategy
    std::vector<std::string> warnings; // prefixed with the trial index
};

// n_trials independent trials with per-trial derived seeds. Trials may run on
// several workers; the fold over trial index order keeps output deterministic.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& ds) {
    validate_config(cfg, ds);

    std::vector<TrialResult> trials(static_cast<std::size_t>(cfg.n_trials));
    std::vector<std::string> failures(static_cast<std::size_t>(cfg.n_trials));
    std::atomic<int> next{0};
    const int n_workers = std::max(1, std::min(cfg.workers, cfg.n_trials));

    const auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= cfg.n_trials) return;
            try {
                trials[static_cast<std::size_t>(i)] = run_trial(cfg, ds, i);
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(i)] = e.what();
            }
        }
    };
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    for (int i = 0; i < cfg.n_trials; ++i) {
        if (!failures[static_cast<std::size_t>(i)].empty())
            throw std::runtime_error("trial " + std::to_string(i) + " (seed " +
                                     std::to_string(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i))) +
                                     ") failed: " + failures[static_cast<std::size_t>(i)]);
    }

    ExperimentResult out;
    for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
        std::vector<std::vector<double>> series;
        series.reserve(trials.size());
        for (const auto& tr : trials) series.push_back(tr.accuracy[s]);
        out.curves.push_back(aggregate_curve(cfg.strategies[s], series));
    }
    for (int i = 0; i < cfg.n_trials; ++i)
        for (const auto& w : trials[static_cast<std::size_t>(i)].warnings)
            out.warnings.push_back("trial " + std::to_string(i) + ": " + w);
    return out;
}

struct DatasetMeta {
    std::string name;
    int instances = 0;
    int features = 0;
    std::string provenance; // "file" or "synthetic"
    std::string source;     // path or synthetic spec string
};

inline DatasetMeta dataset_meta(const Dataset& ds, const std::string& source) {
    return {ds.name, ds.size(), ds.dim(), to_string(ds.provenance), source};
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg, const DatasetMeta& meta) {
    nlohmann::json j;
    j["dataset"] = {{"name", meta.name},
                    {"instances", meta.instances},
                    {"features", meta.features},
                    {"provenance", meta.provenance},
                    {"source", meta.source}};
    j["strategies"] = cfg.strategies;
    j["query_budget"] = cfg.query_budget;
    j["n_trials"] = cfg.n_trials;
    j["k"] = cfg.k;
    j["leverage_kernel"] = {{"kind", to_string(cfg.leverage_kind)},
                            {"sigma", to_string(cfg.leverage_sigma)}};
    j["svm"] = {{"kernel", to_string(cfg.svm_kind)}, {"sigma", to_string(cfg.svm_sigma)},
                {"c", cfg.svm_c},                    {"kkt_tol", cfg.kkt_tol},
                {"max_passes", cfg.max_passes}};
    j["split"] = {{"test_fraction", cfg.test_fraction},
                  {"n_seed_labels", cfg.n_seed_labels},
                  {"stratified", cfg.stratified}};
    j["normalized_leverage"] = cfg.normalized_leverage;
    j["master_seed"] = cfg.master_seed;
    j["workers"] = cfg.workers;
    j["sigma_subsample_cap"] = cfg.sigma_subsample_cap;
    return j;
}

inline std::pair<ExperimentConfig, DatasetMeta> config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    DatasetMeta meta;
    meta.name = j.at("dataset").at("name").get<std::string>();
    meta.instances = j.at("dataset").at("instances").get<int>();
    meta.features = j.at("dataset").at("features").get<int>();
    meta.provenance = j.at("dataset").at("provenance").get<std::string>();
    meta.source = j.at("dataset").at("source").get<std::string>();
    cfg.strategies = j.at("strategies").get<std::vector<std::string>>();
    cfg.query_budget = j.at("query_budget").get<int>();
    cfg.n_trials = j.at("n_trials").get<int>();
    cfg.k = j.at("k").get<int>();
    cfg.leverage_kind = kernel_kind_from_string(j.at("leverage_kernel").at("kind").get<std::string>());
    cfg.leverage_sigma = sigma_policy_from_string(j.at("leverage_kernel").at("sigma").get<std::string>());
    cfg.svm_kind = kernel_kind_from_string(j.at("svm").at("kernel").get<std::string>());
    cfg.svm_sigma = sigma_policy_from_string(j.at("svm").at("sigma").get<std::string>());
    cfg.svm_c = j.at("svm").at("c").get<double>();
    cfg.kkt_tol = j.at("svm").at("kkt_tol").get<double>();
    cfg.max_passes = j.at("svm").at("max_passes").get<int>();
    cfg.test_fraction = j.at("split").at("test_fraction").get<double>();
    cfg.n_seed_labels = j.at("split").at("n_seed_labels").get<int>();
    cfg.stratified = j.at("split").at("stratified").get<bool>();
    cfg.normalized_leverage = j.at("normalized_leverage").get<bool>();
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    cfg.workers = j.at("workers").get<int>();
    cfg.sigma_subsample_cap = j.at("sigma_subsample_cap").get<int>();
    return {cfg, meta};
}

// One delimited table per strategy (queries, mean, std error, then one column
// per trial) plus summary.json with the resolved configuration. Returns the
// paths written.
inline std::vector<std::string> write_results(const std::vector<LearningCurve>& curves,
                                              const DatasetMeta& meta, const ExperimentConfig& cfg,
                                              const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(out_dir) / meta.name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("write_results: cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::string> written;
    for (const auto& curve : curves) {
        const fs::path file = dir / (curve.strategy + ".csv");
        std::ofstream out(file);
        if (!out) throw std::runtime_error("write_results: cannot open " + file.string());
        out << "queries,mean_accuracy,std_error";
        for (std::size_t tr = 0; tr < curve.per_trial.size(); ++tr) out << ",trial_" << tr;
        out << "\n";
        for (std::size_t p = 0; p < curve.mean_accuracy.size(); ++p) {
            out << p << ',' << fmt_double(curve.mean_accuracy[p]) << ',' << fmt_double(curve.std_error[p]);
            for (const auto& series : curve.per_trial) out << ',' << fmt_double(series[p]);
            out << "\n";
        }
        if (!out) throw std::runtime_error("write_results: failed writing " + file.string());
        written.push_back(file.string());
    }

    const fs::path summary = dir / "summary.json";
    std::ofstream out(summary);
    if (!out) throw std::runtime_error("write_results: cannot open " + summary.string());
    out << config_to_json(cfg, meta).dump(2) << "\n";
    if (!out) throw std::runtime_error("write_results: failed writing " + summary.string());
    written.push_back(summary.string());
    return written;
}

} // namespace alevs
