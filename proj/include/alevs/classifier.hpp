// Kernel SVM (pairwise dual coordinate ascent, maximal-violating-pair
// selection) and Platt sigmoid calibration of its decision values.
#pragma once

#include "alevs/common.hpp"
#include "alevs/kernel.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace alevs {

struct SvmConfig {
    double c = 1.0;            // box constraint
    double kkt_tol = 1e-3;     // per-point KKT tolerance, in (0, 0.1]
    int max_passes = 100000;   // cap on pair updates
    KernelKind kind = KernelKind::rbf;
    double sigma = 1.0;        // rbf only
    bool record_objective = false; // keep the dual objective trace (testing)
};

inline void validate(const SvmConfig& cfg) {
    if (!(cfg.c > 0.0)) throw std::invalid_argument("SvmConfig: c must be positive");
    if (!(cfg.kkt_tol > 0.0 && cfg.kkt_tol <= 0.1))
        throw std::invalid_argument("SvmConfig: kkt_tol must be in (0, 0.1]");
    if (cfg.max_passes < 1) throw std::invalid_argument("SvmConfig: max_passes must be positive");
    if (cfg.kind == KernelKind::rbf && !(cfg.sigma > 0.0))
        throw std::invalid_argument("SvmConfig: sigma must be positive");
}

struct TrainedModel {
    std::vector<double> alphas;   // per training point, in [0, c]
    double bias = 0.0;
    std::vector<int> train_ids;   // global ids of the labeled set
    std::vector<int> labels;      // +-1, aligned with train_ids
    std::vector<int> support_idx; // positions with alpha > 0
    std::vector<int> support_ids; // global ids of the support set
    SvmConfig config;
    bool converged = true;
    int iterations = 0;
    double dual_objective = 0.0;
    std::vector<double> objective_trace; // filled when config.record_objective
    double platt_a = -1.0;               // sigmoid calibration, set by fit_platt users
    double platt_b = 0.0;
};

// Solves the dual max sum(a) - 1/2 a'Qa, 0 <= a <= C, y'a = 0 by repeatedly
// optimizing the maximal-violating pair analytically.
inline TrainedModel train(const FeatureBlock& data, const std::vector<int>& labels, const SvmConfig& cfg) {
    validate(cfg);
    const int n = data.size();
    if (n == 0 || static_cast<std::size_t>(n) != labels.size())
        throw std::invalid_argument("train: labels must align with a nonempty block");
    int n_pos = 0, n_neg = 0;
    for (int y : labels) {
        if (y == 1)
            ++n_pos;
        else if (y == -1)
            ++n_neg;
        else
            throw std::invalid_argument("train: labels must be -1 or +1");
    }
    if (n_pos == 0 || n_neg == 0)
        throw SingleClassError("train: labeled set contains a single class", n_pos > 0 ? 1 : -1);

    const Matrix k = build_kernel(data, {cfg.kind, cfg.sigma}).entries;
    const double c = cfg.c;
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)];

    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    std::vector<double> grad(static_cast<std::size_t>(n), -1.0); // G = Qa - e
    const auto q = [&](int i, int j) {
        return y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * k(i, j);
    };
    const auto in_up = [&](int t) {
        return (labels[static_cast<std::size_t>(t)] == 1 && alpha[static_cast<std::size_t>(t)] < c) ||
               (labels[static_cast<std::size_t>(t)] == -1 && alpha[static_cast<std::size_t>(t)] > 0.0);
    };
    const auto in_low = [&](int t) {
        return (labels[static_cast<std::size_t>(t)] == 1 && alpha[static_cast<std::size_t>(t)] > 0.0) ||
               (labels[static_cast<std::size_t>(t)] == -1 && alpha[static_cast<std::size_t>(t)] < c);
    };
    const auto dual_obj = [&]() {
        double s = 0.0;
        for (int t = 0; t < n; ++t)
            s += alpha[static_cast<std::size_t>(t)] * (grad[static_cast<std::size_t>(t)] - 1.0);
        return -0.5 * s;
    };

    TrainedModel model;
    model.config = cfg;
    if (cfg.record_objective) model.objective_trace.push_back(dual_obj());

    const double eps = cfg.kkt_tol;
    bool converged = false;
    int iter = 0;
    for (; iter < cfg.max_passes; ++iter) {
        int i = -1, j = -1;
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (int t = 0; t < n; ++t) {
            const double v = -y[static_cast<std::size_t>(t)] * grad[static_cast<std::size_t>(t)];
            if (in_up(t) && v > m_up) {
                m_up = v;
                i = t;
            }
            if (in_low(t) && v < m_low) {
                m_low = v;
                j = t;
            }
        }
        if (i < 0 || j < 0 || m_up - m_low <= eps) {
            converged = true;
            break;
        }

        // step delta along (da_i, da_j) = (y_i, -y_j) * delta
        double a2 = q(i, i) + q(j, j) - 2.0 * y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * q(i, j);
        if (a2 <= 0.0) a2 = 1e-12;
        double delta = (m_up - m_low) / a2;

        const auto bounds = [&](int t, double dir, double& lo, double& hi) {
            // alpha_t' = alpha_t + dir * delta must stay in [0, c]
            if (dir > 0.0) {
                lo = -alpha[static_cast<std::size_t>(t)];
                hi = c - alpha[static_cast<std::size_t>(t)];
            } else {
                lo = alpha[static_cast<std::size_t>(t)] - c;
                hi = alpha[static_cast<std::size_t>(t)];
            }
        };
        double lo_i, hi_i, lo_j, hi_j;
        bounds(i, y[static_cast<std::size_t>(i)], lo_i, hi_i);
        bounds(j, -y[static_cast<std::size_t>(j)], lo_j, hi_j);
        delta = std::clamp(delta, std::max(lo_i, lo_j), std::min(hi_i, hi_j));

        const double dai = y[static_cast<std::size_t>(i)] * delta;
        const double daj = -y[static_cast<std::size_t>(j)] * delta;
        alpha[static_cast<std::size_t>(i)] =
            std::clamp(alpha[static_cast<std::size_t>(i)] + dai, 0.0, c);
        alpha[static_cast<std::size_t>(j)] =
            std::clamp(alpha[static_cast<std::size_t>(j)] + daj, 0.0, c);
        for (int t = 0; t < n; ++t)
            grad[static_cast<std::size_t>(t)] += q(t, i) * dai + q(t, j) * daj;

        if (cfg.record_objective) model.objective_trace.push_back(dual_obj());
    }

    // bias from the feasible interval [max over up, min over low] of y_t - g_t
    double b_lo = -std::numeric_limits<double>::infinity();
    double b_hi = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
        const double v = -y[static_cast<std::size_t>(t)] * grad[static_cast<std::size_t>(t)];
        if (in_up(t)) b_lo = std::max(b_lo, v);
        if (in_low(t)) b_hi = std::min(b_hi, v);
    }
    model.bias = 0.5 * (b_lo + b_hi);

    model.alphas = alpha;
    model.train_ids = data.global_ids;
    model.labels = labels;
    model.converged = converged;
    model.iterations = iter;
    model.dual_objective = dual_obj();
    for (int t = 0; t < n; ++t) {
        if (alpha[static_cast<std::size_t>(t)] > 0.0) {
            model.support_idx.push_back(t);
            model.support_ids.push_back(data.global_ids[static_cast<std::size_t>(t)]);
        }
    }
    return model;
}

// f(x) = sum_s alpha_s y_s K(x_s, x) + b over the support set. `cross` holds
// one row per query, one column per support vector (model order).
inline std::vector<double> decision_values(const TrainedModel& model, const Matrix& cross) {
    if (cross.cols() != static_cast<Eigen::Index>(model.support_idx.size()))
        throw std::invalid_argument("decision_values: cross-kernel columns must match the support set");
    std::vector<double> f(static_cast<std::size_t>(cross.rows()), model.bias);
    for (Eigen::Index r = 0; r < cross.rows(); ++r) {
        for (std::size_t s = 0; s < model.support_idx.size(); ++s) {
            const int t = model.support_idx[s];
            f[static_cast<std::size_t>(r)] += model.alphas[static_cast<std::size_t>(t)] *
                                              model.labels[static_cast<std::size_t>(t)] *
                                              cross(r, static_cast<Eigen::Index>(s));
        }
    }
    return f;
}

// Sign rule with the documented tie: f = 0 maps to +1.
inline int predict_one(double f) { return f >= 0.0 ? 1 : -1; }

inline std::vector<int> predict(const TrainedModel& model, const Matrix& cross) {
    const std::vector<double> f = decision_values(model, cross);
    std::vector<int> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = predict_one(f[i]);
    return out;
}

struct PlattParams {
    double a = -1.0;
    double b = 0.0;
    bool converged = true;
};

// P(y = +1 | f) = 1 / (1 + exp(a f + b)), evaluated without overflow.
inline double posterior(const PlattParams& p, double f) {
    const double z = p.a * f + p.b;
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

// Newton fit with backtracking of the smoothed-target negative log-likelihood
// (targets (N+ + 1)/(N+ + 2) and 1/(N- + 2)). Falls back to (-1, 0) when the
// optimizer fails to converge within 100 iterations.
inline PlattParams fit_platt(const std::vector<double>& decisions, const std::vector<int>& labels) {
    if (decisions.size() != labels.size() || decisions.empty())
        throw std::invalid_argument("fit_platt: decisions and labels must align and be nonempty");
    double prior1 = 0.0, prior0 = 0.0;
    for (int yv : labels) (yv > 0 ? prior1 : prior0) += 1.0;
    if (prior1 == 0.0 || prior0 == 0.0)
        throw std::invalid_argument("fit_platt: both classes must be present");

    const std::size_t n = decisions.size();
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] > 0 ? hi : lo;

    const auto nll = [&](double a, double b) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = a * decisions[i] + b;
            if (z >= 0.0)
                v += t[i] * z + std::log1p(std::exp(-z));
            else
                v += (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return v;
    };

    double a = 0.0;
    double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    double fval = nll(a, b);
    const double grad_eps = 1e-8;
    const int max_iter = 100;
    bool converged = false;

    for (int it = 0; it < max_iter; ++it) {
        double h11 = 1e-12, h22 = 1e-12, h10 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = a * decisions[i] + b;
            double p, qv;
            if (z >= 0.0) {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                qv = 1.0 / (1.0 + std::exp(-z));
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                qv = std::exp(z) / (1.0 + std::exp(z));
            }
            const double d1 = t[i] - p;
            const double d2 = p * qv;
            g1 += decisions[i] * d1;
            g2 += d1;
            h11 += decisions[i] * decisions[i] * d2;
            h22 += d2;
            h10 += decisions[i] * d2;
        }
        if (std::abs(g1) < grad_eps && std::abs(g2) < grad_eps) {
            converged = true;
            break;
        }
        const double det = h11 * h22 - h10 * h10;
        const double da = -(h22 * g1 - h10 * g2) / det;
        const double db = -(-h10 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;

        double step = 1.0;
        bool moved = false;
        while (step >= 1e-12) {
            const double na = a + step * da;
            const double nb = b + step * db;
            const double nf = nll(na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                a = na;
                b = nb;
                fval = nf;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break; // line search exhausted
    }

    if (!converged) return {-1.0, 0.0, false};
    return {a, b, true};
}

} // namespace alevs
