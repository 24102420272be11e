// Full symmetric eigendecomposition (cyclic Jacobi) and rank-k statistical
// leverage scores of SPSD kernel matrices.
#pragma once

#include "alevs/common.hpp"
#include "alevs/kernel.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

namespace alevs {

// Eigenvalues in descending order; columns of `vectors` are the matching
// orthonormal eigenvectors.
struct EigenDecomposition {
    Vector values;
    Matrix vectors;

    int size() const { return static_cast<int>(values.size()); }
};

namespace detail {

inline double offdiag_norm(const Matrix& a) {
    const int n = static_cast<int>(a.rows());
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
}

// Cyclic Jacobi sweeps. Rotations accumulate into V so that the input equals
// V * diag(a) * V^T on convergence.
inline EigenDecomposition jacobi_eig(Matrix a, int max_sweeps) {
    const int n = static_cast<int>(a.rows());
    Matrix v = Matrix::Identity(n, n);

    const double norm_f = a.norm();
    const double tol = 1e-12 * norm_f;

    bool converged = norm_f == 0.0 || n == 1;
    double off = converged ? 0.0 : offdiag_norm(a);
    if (off <= tol) converged = true;

    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double app = a(p, p);
                const double aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int r = 0; r < n; ++r) {
                    if (r != p && r != q) {
                        const double arp = a(r, p);
                        const double arq = a(r, q);
                        a(r, p) = arp - s * (arq + tau * arp);
                        a(p, r) = a(r, p);
                        a(r, q) = arq + s * (arp - tau * arq);
                        a(q, r) = a(r, q);
                    }
                    const double vrp = v(r, p);
                    const double vrq = v(r, q);
                    v(r, p) = vrp - s * (vrq + tau * vrp);
                    v(r, q) = vrq + s * (vrp - tau * vrq);
                }
            }
        }
        off = offdiag_norm(a);
        if (off <= tol) converged = true;
    }

    if (!converged)
        throw ConvergenceError("eig_sym: Jacobi did not converge in " + std::to_string(max_sweeps) +
                                   " sweeps, off-diagonal residual " + fmt_double(off),
                               off);

    // sort eigenpairs descending; stable so equal values keep sweep order
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });

    EigenDecomposition dec;
    dec.values.resize(n);
    dec.vectors.resize(n, n);
    for (int c = 0; c < n; ++c) {
        dec.values(c) = a(order[static_cast<std::size_t>(c)], order[static_cast<std::size_t>(c)]);
        dec.vectors.col(c) = v.col(order[static_cast<std::size_t>(c)]);
    }

    // clamp roundoff negatives of an SPSD input
    const double lam_max = std::max(dec.values(0), 0.0);
    for (int c = 0; c < n; ++c)
        if (dec.values(c) < 0.0 && dec.values(c) >= -1e-8 * lam_max) dec.values(c) = 0.0;
    return dec;
}

constexpr int kJacobiMaxSweeps = 100;

} // namespace detail

inline EigenDecomposition eig_sym(const Matrix& k) {
    if (k.rows() == 0 || k.rows() != k.cols())
        throw std::invalid_argument("eig_sym: matrix must be square and nonempty");
    if (!k.allFinite()) throw std::invalid_argument("eig_sym: non-finite entries");
    return detail::jacobi_eig(k, detail::kJacobiMaxSweeps);
}

inline EigenDecomposition eig_sym(const KernelMatrix& k) { return eig_sym(k.entries); }

// Per-instance leverage scores for the rank actually used.
struct LeverageScores {
    std::map<int, double> scores; // global id -> score in [0, 1]
    int rank_k = 0;               // effective rank min(k, n)

    double sum() const {
        double s = 0.0;
        for (const auto& [id, v] : scores) s += v;
        return s;
    }
};

// Squared row norms of the top-k eigenvector block, keyed by global id.
// k larger than the matrix clamps to n.
inline LeverageScores leverage_scores(const EigenDecomposition& dec, int k, const std::vector<int>& ids) {
    const int n = dec.size();
    if (k < 1) throw std::invalid_argument("leverage_scores: k must be >= 1");
    if (static_cast<int>(ids.size()) != n)
        throw std::invalid_argument("leverage_scores: ids length must match decomposition size");

    const int eff = std::min(k, n);
    LeverageScores out;
    out.rank_k = eff;
    if (eff == n) {
        // full-rank projector: every row norm of an orthogonal matrix is 1
        for (int j = 0; j < n; ++j) out.scores[ids[static_cast<std::size_t>(j)]] = 1.0;
        return out;
    }
    for (int j = 0; j < n; ++j)
        out.scores[ids[static_cast<std::size_t>(j)]] = dec.vectors.row(j).head(eff).squaredNorm();
    return out;
}

inline LeverageScores leverage_scores(const KernelMatrix& k, int rank) {
    return leverage_scores(eig_sym(k), rank, k.global_ids);
}

} // namespace alevs
