// Shared basics: matrix aliases, error types, deterministic RNG streams.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace alevs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Eigensolver (or any iterative routine) ran out of iterations.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, double residual)
        : std::runtime_error(msg), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// A query strategy was asked to pick from an empty unlabeled pool.
class PoolExhaustedError : public std::runtime_error {
public:
    explicit PoolExhaustedError(const std::string& msg) : std::runtime_error(msg) {}
};

// SVM training received instances of only one class.
class SingleClassError : public std::invalid_argument {
public:
    SingleClassError(const std::string& msg, int seen_label)
        : std::invalid_argument(msg), seen_label_(seen_label) {}
    int seen_label() const { return seen_label_; }

private:
    int seen_label_;
};

// Text-format parse failure, carries the offending line.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& path, std::size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
          path_(path),
          line_(line) {}
    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

// Deterministic child seed for (master, tag). Used to give every trial and
// every stream its own independent state regardless of execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
    return detail::splitmix64(detail::splitmix64(master) ^ detail::splitmix64(~tag));
}

// Deterministic RNG stream. The engine is std::mt19937_64 (bit-exact by the
// standard); the distributions are implemented here so that draws do not
// depend on the standard library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n), unbiased via rejection.
    int uniform_int(int n) {
        if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return static_cast<int>(r % un);
    }

    // Standard normal via Box-Muller, one spare value cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01(); // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Lossless, locale-independent double formatting for reproducible files.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

} // namespace alevs
