// The four query-selection policies: class-partitioned leverage (alevs),
// uncertainty, random, and leverage over all data.
#pragma once

#include "alevs/common.hpp"
#include "alevs/eigensolver.hpp"
#include "alevs/kernel.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace alevs {

// Labeled/unlabeled id sets of the training pool at iteration t.
struct PoolState {
    std::vector<int> labeled_ids;    // acquisition order
    std::vector<int> labeled_labels; // +-1, aligned with labeled_ids
    std::vector<int> unlabeled_ids;  // kept sorted ascending
    int iteration = 0;

    PoolState() = default;
    PoolState(std::vector<int> lab_ids, std::vector<int> lab_labels, std::vector<int> unlab_ids)
        : labeled_ids(std::move(lab_ids)),
          labeled_labels(std::move(lab_labels)),
          unlabeled_ids(std::move(unlab_ids)) {
        if (labeled_ids.size() != labeled_labels.size())
            throw std::invalid_argument("PoolState: labels must align with labeled ids");
        std::sort(unlabeled_ids.begin(), unlabeled_ids.end());
        for (int id : labeled_ids)
            if (std::binary_search(unlabeled_ids.begin(), unlabeled_ids.end(), id))
                throw std::invalid_argument("PoolState: labeled and unlabeled ids overlap");
    }

    bool is_unlabeled(int id) const {
        return std::binary_search(unlabeled_ids.begin(), unlabeled_ids.end(), id);
    }

    // Reveal the oracle's label: move id from the unlabeled to the labeled set.
    void acquire(int id, int label) {
        const auto it = std::lower_bound(unlabeled_ids.begin(), unlabeled_ids.end(), id);
        if (it == unlabeled_ids.end() || *it != id)
            throw std::invalid_argument("PoolState::acquire: id is not unlabeled");
        unlabeled_ids.erase(it);
        labeled_ids.push_back(id);
        labeled_labels.push_back(label);
        ++iteration;
    }
};

struct QueryDecision {
    int chosen_id = -1;
    double score = 0.0;
    std::string strategy_name;
    std::map<std::string, double> diagnostics;
};

namespace detail {

struct ArgmaxResult {
    int id = -1;
    double score = 0.0;
    int ties = 0;
};

// Highest score among the candidates; ties go to the smallest id.
inline ArgmaxResult argmax_by_score(const std::map<int, double>& scores, const std::vector<int>& candidates) {
    if (candidates.empty()) throw PoolExhaustedError("argmax_by_score: no candidates");
    std::vector<int> order = candidates;
    std::sort(order.begin(), order.end());
    ArgmaxResult best;
    for (int id : order) {
        const auto it = scores.find(id);
        if (it == scores.end())
            throw std::invalid_argument("argmax_by_score: no score for id " + std::to_string(id));
        if (best.id < 0 || it->second > best.score) {
            best.id = id;
            best.score = it->second;
            best.ties = 1;
        } else if (it->second == best.score) {
            ++best.ties;
        }
    }
    return best;
}

// Ids ordered by descending score, ties ascending by id.
inline std::vector<int> rank_ids_by_score(const std::map<int, double>& scores) {
    std::vector<std::pair<int, double>> items(scores.begin(), scores.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
    std::vector<int> out;
    out.reserve(items.size());
    for (const auto& [id, s] : items) out.push_back(id);
    return out;
}

} // namespace detail

// Split every pool instance into the positive/negative blocks: labeled ids by
// their true label, unlabeled ids by the classifier's prediction.
inline std::pair<FeatureBlock, FeatureBlock> build_partitions(const PoolState& state,
                                                              const std::map<int, int>& predictions,
                                                              const Matrix& features) {
    std::vector<int> pos_ids, neg_ids;
    std::vector<std::pair<int, int>> merged; // (id, label)
    merged.reserve(state.labeled_ids.size() + state.unlabeled_ids.size());
    for (std::size_t i = 0; i < state.labeled_ids.size(); ++i)
        merged.emplace_back(state.labeled_ids[i], state.labeled_labels[i]);
    for (int id : state.unlabeled_ids) {
        const auto it = predictions.find(id);
        if (it == predictions.end())
            throw std::invalid_argument("build_partitions: missing prediction for id " + std::to_string(id));
        merged.emplace_back(id, it->second);
    }
    std::sort(merged.begin(), merged.end());
    for (const auto& [id, label] : merged) (label > 0 ? pos_ids : neg_ids).push_back(id);
    return {make_block(features, pos_ids), make_block(features, neg_ids)};
}

// Algorithm core: per-class kernels, per-class leverage scores with effective
// rank min(k, partition size), argmax restricted to the unlabeled pool.
// `normalized` rescales each score by partition_size / effective_k before the
// argmax (off by default; the literal reading compares raw scores).
inline QueryDecision alevs_select(const PoolState& state, const FeatureBlock& positives,
                                  const FeatureBlock& negatives, int k, const KernelConfig& kernel_cfg,
                                  bool normalized = false) {
    if (state.unlabeled_ids.empty()) throw PoolExhaustedError("alevs_select: unlabeled pool is empty");
    if (k < 1) throw std::invalid_argument("alevs_select: k must be >= 1");

    std::map<int, double> pooled;
    QueryDecision decision;
    decision.strategy_name = "alevs";
    decision.diagnostics["pos_size"] = positives.size();
    decision.diagnostics["neg_size"] = negatives.size();

    const auto add_partition = [&](const FeatureBlock& block, const std::string& k_tag) {
        if (block.empty()) {
            decision.diagnostics[k_tag] = 0.0;
            return;
        }
        const LeverageScores lev = leverage_scores(build_kernel(block, kernel_cfg), k);
        decision.diagnostics[k_tag] = lev.rank_k;
        const double scale = normalized ? static_cast<double>(block.size()) / lev.rank_k : 1.0;
        for (const auto& [id, s] : lev.scores) pooled[id] = s * scale;
    };
    add_partition(positives, "k_pos");
    add_partition(negatives, "k_neg");

    const detail::ArgmaxResult best = detail::argmax_by_score(pooled, state.unlabeled_ids);
    decision.chosen_id = best.id;
    decision.score = best.score;
    decision.diagnostics["ties"] = best.ties;
    return decision;
}

// Query the posterior closest to 1/2, i.e. the largest 1 - p(y*|x).
inline QueryDecision uncertainty_select(const PoolState& state, const std::map<int, double>& posterior_pos) {
    if (state.unlabeled_ids.empty())
        throw PoolExhaustedError("uncertainty_select: unlabeled pool is empty");
    std::map<int, double> uncertainty;
    for (int id : state.unlabeled_ids) {
        const auto it = posterior_pos.find(id);
        if (it == posterior_pos.end())
            throw std::invalid_argument("uncertainty_select: missing posterior for id " + std::to_string(id));
        const double p = it->second;
        uncertainty[id] = 1.0 - std::max(p, 1.0 - p);
    }
    const detail::ArgmaxResult best = detail::argmax_by_score(uncertainty, state.unlabeled_ids);
    QueryDecision decision;
    decision.strategy_name = "uncertainty";
    decision.chosen_id = best.id;
    decision.score = best.score;
    decision.diagnostics["ties"] = best.ties;
    return decision;
}

inline QueryDecision random_select(const PoolState& state, Rng& rng) {
    if (state.unlabeled_ids.empty()) throw PoolExhaustedError("random_select: unlabeled pool is empty");
    const int pick = rng.uniform_int(static_cast<int>(state.unlabeled_ids.size()));
    QueryDecision decision;
    decision.strategy_name = "random";
    decision.chosen_id = state.unlabeled_ids[static_cast<std::size_t>(pick)];
    decision.score = 0.0;
    return decision;
}

// Ranking for the class-blind baseline: leverage over the whole pool, computed
// once per experiment; the harness consumes the top still-unlabeled id.
inline std::vector<int> leverage_all_rank(const FeatureBlock& pool, int k, const KernelConfig& kernel_cfg) {
    if (pool.empty()) throw std::invalid_argument("leverage_all_rank: empty pool");
    if (k < 1) throw std::invalid_argument("leverage_all_rank: k must be >= 1");
    const LeverageScores lev = leverage_scores(build_kernel(pool, kernel_cfg), k);
    return detail::rank_ids_by_score(lev.scores);
}

} // namespace alevs
