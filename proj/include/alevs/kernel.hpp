// Linear and RBF Gram matrices over instance blocks, plus the median-distance
// bandwidth heuristic.
#pragma once

#include "alevs/common.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace alevs {

// A set of instances: one feature vector per row, aligned with global ids.
struct FeatureBlock {
    Matrix rows;                  // n x d
    std::vector<int> global_ids;  // length n, unique

    FeatureBlock() = default;
    FeatureBlock(Matrix r, std::vector<int> ids) : rows(std::move(r)), global_ids(std::move(ids)) {
        if (static_cast<std::size_t>(rows.rows()) != global_ids.size())
            throw std::invalid_argument("FeatureBlock: rows/ids length mismatch");
        if (rows.rows() > 0 && rows.cols() < 1)
            throw std::invalid_argument("FeatureBlock: feature dimension must be >= 1");
        std::set<int> uniq(global_ids.begin(), global_ids.end());
        if (uniq.size() != global_ids.size())
            throw std::invalid_argument("FeatureBlock: global ids must be unique");
    }

    int size() const { return static_cast<int>(rows.rows()); }
    bool empty() const { return rows.rows() == 0; }
};

// Gather the given rows of a feature matrix into a block. Global ids are the
// row indices of the source matrix.
inline FeatureBlock make_block(const Matrix& features, const std::vector<int>& ids) {
    Matrix rows(static_cast<Eigen::Index>(ids.size()), features.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= features.rows())
            throw std::invalid_argument("make_block: id " + std::to_string(ids[i]) + " out of range");
        rows.row(static_cast<Eigen::Index>(i)) = features.row(ids[i]);
    }
    return FeatureBlock(std::move(rows), ids);
}

enum class KernelKind { linear, rbf };

inline std::string to_string(KernelKind k) { return k == KernelKind::linear ? "linear" : "rbf"; }

inline KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "linear") return KernelKind::linear;
    if (s == "rbf") return KernelKind::rbf;
    throw std::invalid_argument("unknown kernel kind '" + s + "' (expected linear|rbf)");
}

// Symmetric PSD Gram matrix with the id map for its rows.
struct KernelMatrix {
    Matrix entries;               // n x n, symmetric
    std::vector<int> global_ids;  // length n
    KernelKind kind = KernelKind::linear;
    double sigma = 0.0;           // rbf only

    int size() const { return static_cast<int>(entries.rows()); }
};

// Resolved kernel parameters for leverage computations.
struct KernelConfig {
    KernelKind kind = KernelKind::rbf;
    double sigma = 1.0; // ignored for linear
};

inline KernelMatrix linear_kernel(const FeatureBlock& block) {
    if (block.empty()) throw std::invalid_argument("linear_kernel: empty block");
    const int n = block.size();
    KernelMatrix k;
    k.kind = KernelKind::linear;
    k.global_ids = block.global_ids;
    k.entries.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double v = block.rows.row(i).dot(block.rows.row(j));
            k.entries(i, j) = v;
            k.entries(j, i) = v;
        }
    }
    return k;
}

inline KernelMatrix rbf_kernel(const FeatureBlock& block, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("rbf_kernel: sigma must be positive");
    if (block.empty()) throw std::invalid_argument("rbf_kernel: empty block");
    const int n = block.size();
    const double inv = 1.0 / (2.0 * sigma * sigma);
    KernelMatrix k;
    k.kind = KernelKind::rbf;
    k.sigma = sigma;
    k.global_ids = block.global_ids;
    k.entries.resize(n, n);
    for (int i = 0; i < n; ++i) {
        k.entries(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            // distance computed per pair, not via the norm expansion
            const double d2 = (block.rows.row(i) - block.rows.row(j)).squaredNorm();
            const double v = std::exp(-d2 * inv);
            k.entries(i, j) = v;
            k.entries(j, i) = v;
        }
    }
    return k;
}

inline KernelMatrix build_kernel(const FeatureBlock& block, const KernelConfig& cfg) {
    return cfg.kind == KernelKind::linear ? linear_kernel(block) : rbf_kernel(block, cfg.sigma);
}

// Rectangular kernel between two blocks (queries x references); feeds the SVM
// decision function.
inline Matrix cross_kernel(const FeatureBlock& a, const FeatureBlock& b, KernelKind kind, double sigma = 1.0) {
    if (kind == KernelKind::rbf && !(sigma > 0.0))
        throw std::invalid_argument("cross_kernel: sigma must be positive");
    if (!a.empty() && !b.empty() && a.rows.cols() != b.rows.cols())
        throw std::invalid_argument("cross_kernel: dimension mismatch");
    Matrix m(a.size(), b.size());
    const double inv = kind == KernelKind::rbf ? 1.0 / (2.0 * sigma * sigma) : 0.0;
    for (int i = 0; i < a.size(); ++i) {
        for (int j = 0; j < b.size(); ++j) {
            if (kind == KernelKind::linear) {
                m(i, j) = a.rows.row(i).dot(b.rows.row(j));
            } else {
                const double d2 = (a.rows.row(i) - b.rows.row(j)).squaredNorm();
                m(i, j) = std::exp(-d2 * inv);
            }
        }
    }
    return m;
}

struct MedianSigmaResult {
    double sigma = 1.0;
    bool degenerate = false; // all sampled pairwise distances were zero
};

// Median pairwise Euclidean distance over a seeded subsample of the rows.
// Falls back to 1.0 when every sampled distance is zero.
inline MedianSigmaResult median_sigma_detail(const FeatureBlock& block, int subsample_cap = 200,
                                             std::uint64_t seed = 0) {
    if (block.size() < 2) throw std::invalid_argument("median_sigma: need at least 2 rows");
    if (subsample_cap < 2) throw std::invalid_argument("median_sigma: subsample_cap must be >= 2");

    const int n = block.size();
    const int m = std::min(n, subsample_cap);
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    if (m < n) {
        Rng rng(seed);
        // partial Fisher-Yates: first m entries become the sample
        for (int i = 0; i < m; ++i) {
            const int j = i + rng.uniform_int(n - i);
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
    }

    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(m - 1) / 2);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            dists.push_back((block.rows.row(idx[static_cast<std::size_t>(i)]) -
                             block.rows.row(idx[static_cast<std::size_t>(j)]))
                                .norm());

    std::sort(dists.begin(), dists.end());
    const std::size_t half = dists.size() / 2;
    const double med = dists.size() % 2 == 1 ? dists[half] : 0.5 * (dists[half - 1] + dists[half]);
    if (med > 0.0) return {med, false};
    return {1.0, true};
}

inline double median_sigma(const FeatureBlock& block, int subsample_cap = 200, std::uint64_t seed = 0) {
    return median_sigma_detail(block, subsample_cap, seed).sigma;
}

} // namespace alevs
