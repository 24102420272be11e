// Dataset ingestion (delimited and sparse index:value text), synthetic
// two-Gaussians generation, the train/test split protocol, and the benchmark
// registry.
#pragma once

#include "alevs/common.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace alevs {

enum class Provenance { file, synthetic };

inline std::string to_string(Provenance p) { return p == Provenance::file ? "file" : "synthetic"; }

struct Dataset {
    std::string name;
    Matrix features;         // n x d
    std::vector<int> labels; // +-1, length n
    Provenance provenance = Provenance::file;

    int size() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
};

struct SplitSpec {
    double test_fraction = 0.5;
    int n_seed_labels = 4;
    std::uint64_t seed = 0;
    bool stratified = true; // off: seeds drawn without class balancing
};

struct SplitResult {
    std::vector<int> train_ids; // sorted
    std::vector<int> test_ids;  // sorted
    std::vector<int> seed_ids;  // sorted, subset of train_ids
};

namespace detail {

inline void check_dataset(const Dataset& ds, const std::string& context) {
    if (ds.size() == 0) throw std::invalid_argument(context + ": dataset is empty");
    if (ds.labels.size() != static_cast<std::size_t>(ds.size()))
        throw std::invalid_argument(context + ": labels must align with features");
    if (!ds.features.allFinite())
        throw std::invalid_argument(context + ": non-finite feature values");
    bool pos = false, neg = false;
    for (int y : ds.labels) (y > 0 ? pos : neg) = true;
    if (!pos || !neg) throw std::invalid_argument(context + ": both classes must be present");
}

// Accepted encodings: -1/+1 as is, 0/1 mapped to -1/+1. Mixing 0 with -1 is
// rejected.
inline std::vector<int> map_labels(const std::vector<double>& raw, const std::string& path) {
    bool has_zero = false, has_minus = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = raw[i];
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9 || (r != -1.0 && r != 0.0 && r != 1.0))
            throw FormatError(path, i + 1, "label value " + fmt_double(v) + " is not in {-1, 0, 1}");
        if (r == 0.0) has_zero = true;
        if (r == -1.0) has_minus = true;
    }
    if (has_zero && has_minus)
        throw FormatError(path, 0, "labels mix 0/1 and -1/+1 encodings");
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double r = std::round(raw[i]);
        out[i] = has_zero ? (r == 1.0 ? 1 : -1) : static_cast<int>(r);
    }
    return out;
}

inline double parse_number(const std::string& tok, const std::string& path, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw FormatError(path, line, "cannot parse number '" + tok + "'");
    if (!std::isfinite(v)) throw FormatError(path, line, "non-finite value '" + tok + "'");
    return v;
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

} // namespace detail

// Delimited numeric text, one instance per line. label_column < 0 addresses
// from the end (-1 = last column).
inline Dataset load_delimited(const std::string& path, int label_column = -1, char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_delimited: cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::vector<double> raw_labels;
    std::string line;
    std::size_t line_no = 0;
    std::size_t n_cols = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(t);
        std::string tok;
        while (std::getline(ss, tok, delimiter))
            vals.push_back(detail::parse_number(detail::trim(tok), path, line_no));
        if (vals.size() < 2) throw FormatError(path, line_no, "need at least one feature and a label");
        if (n_cols == 0)
            n_cols = vals.size();
        else if (vals.size() != n_cols)
            throw FormatError(path, line_no,
                              "expected " + std::to_string(n_cols) + " columns, got " +
                                  std::to_string(vals.size()));
        int lc = label_column < 0 ? static_cast<int>(vals.size()) + label_column : label_column;
        if (lc < 0 || lc >= static_cast<int>(vals.size()))
            throw FormatError(path, line_no, "label column out of range");
        raw_labels.push_back(vals[static_cast<std::size_t>(lc)]);
        vals.erase(vals.begin() + lc);
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::invalid_argument("load_delimited: " + path + " has no data lines");

    Dataset ds;
    ds.name = std::filesystem::path(path).stem().string();
    ds.provenance = Provenance::file;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.labels = detail::map_labels(raw_labels, path);
    detail::check_dataset(ds, "load_delimited");
    return ds;
}

// Sparse `label index:value` lines with 1-based indices; absent indices are
// zeros and the dimension is the maximum index seen.
inline Dataset load_sparse_index(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_sparse_index: cannot open " + path);

    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<double> raw_labels;
    std::string line;
    std::size_t line_no = 0;
    int max_index = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        std::stringstream ss(t);
        std::string tok;
        if (!(ss >> tok)) continue;
        raw_labels.push_back(detail::parse_number(tok, path, line_no));
        std::vector<std::pair<int, double>> entries;
        while (ss >> tok) {
            const std::size_t colon = tok.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
                throw FormatError(path, line_no, "expected index:value, got '" + tok + "'");
            const double di = detail::parse_number(tok.substr(0, colon), path, line_no);
            if (di < 1.0 || di != std::round(di))
                throw FormatError(path, line_no, "feature index must be a 1-based integer");
            const int idx = static_cast<int>(di);
            for (const auto& [seen, v] : entries)
                if (seen == idx)
                    throw FormatError(path, line_no, "duplicate index " + std::to_string(idx));
            entries.emplace_back(idx, detail::parse_number(tok.substr(colon + 1), path, line_no));
            max_index = std::max(max_index, idx);
        }
        rows.push_back(std::move(entries));
    }
    if (rows.empty()) throw std::invalid_argument("load_sparse_index: " + path + " has no data lines");
    if (max_index == 0) throw std::invalid_argument("load_sparse_index: " + path + " has no features");

    Dataset ds;
    ds.name = std::filesystem::path(path).stem().string();
    ds.provenance = Provenance::file;
    ds.features = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (const auto& [idx, v] : rows[i]) ds.features(static_cast<Eigen::Index>(i), idx - 1) = v;
    ds.labels = detail::map_labels(raw_labels, path);
    detail::check_dataset(ds, "load_sparse_index");
    return ds;
}

// Two isotropic unit-variance Gaussians centered at +-(separation/2) e1.
// Rows 0..n-1 are the positive class, rows n..2n-1 the negative class.
inline Dataset synth_two_gaussians(int n_per_class, int d, double separation, std::uint64_t seed) {
    if (n_per_class < 1) throw std::invalid_argument("synth_two_gaussians: n_per_class must be >= 1");
    if (d < 1) throw std::invalid_argument("synth_two_gaussians: d must be >= 1");
    if (separation < 0.0) throw std::invalid_argument("synth_two_gaussians: separation must be >= 0");

    Dataset ds;
    ds.name = "two-gaussians";
    ds.provenance = Provenance::synthetic;
    ds.features.resize(2 * n_per_class, d);
    ds.labels.assign(static_cast<std::size_t>(2 * n_per_class), 0);
    Rng rng(seed);
    for (int c = 0; c < 2; ++c) {
        const double center = (c == 0 ? 0.5 : -0.5) * separation;
        for (int i = 0; i < n_per_class; ++i) {
            const int row = c * n_per_class + i;
            for (int j = 0; j < d; ++j)
                ds.features(row, j) = rng.gaussian() + (j == 0 ? center : 0.0);
            ds.labels[static_cast<std::size_t>(row)] = c == 0 ? 1 : -1;
        }
    }
    return ds;
}

// Random disjoint train/test split plus the initially labeled seed ids
// (stratified by default: for n_seed_labels = 4 exactly 2 per class).
inline SplitResult split(const Dataset& ds, const SplitSpec& spec) {
    detail::check_dataset(ds, "split");
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        throw std::invalid_argument("split: test_fraction must be in (0, 1)");
    if (spec.n_seed_labels < 2) throw std::invalid_argument("split: n_seed_labels must be >= 2");

    const int n = ds.size();
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    Rng rng(spec.seed);
    rng.shuffle(ids);

    int n_test = static_cast<int>(std::llround(n * spec.test_fraction));
    n_test = std::clamp(n_test, 1, n - 1);
    SplitResult out;
    out.test_ids.assign(ids.begin(), ids.begin() + n_test);
    out.train_ids.assign(ids.begin() + n_test, ids.end());
    std::sort(out.test_ids.begin(), out.test_ids.end());
    std::sort(out.train_ids.begin(), out.train_ids.end());

    if (spec.n_seed_labels > static_cast<int>(out.train_ids.size()))
        throw std::invalid_argument("split: n_seed_labels exceeds the training pool");

    if (spec.stratified) {
        // odd counts give the extra seed to the positive class
        const int want_pos = (spec.n_seed_labels + 1) / 2;
        const int want_neg = spec.n_seed_labels / 2;
        std::vector<int> pos, neg;
        for (int id : out.train_ids)
            (ds.labels[static_cast<std::size_t>(id)] > 0 ? pos : neg).push_back(id);
        if (static_cast<int>(pos.size()) < want_pos || static_cast<int>(neg.size()) < want_neg)
            throw std::invalid_argument("split: a class is too small to stratify the seed labels");
        rng.shuffle(pos);
        rng.shuffle(neg);
        out.seed_ids.assign(pos.begin(), pos.begin() + want_pos);
        out.seed_ids.insert(out.seed_ids.end(), neg.begin(), neg.begin() + want_neg);
    } else {
        std::vector<int> pool = out.train_ids;
        rng.shuffle(pool);
        out.seed_ids.assign(pool.begin(), pool.begin() + spec.n_seed_labels);
    }
    std::sort(out.seed_ids.begin(), out.seed_ids.end());
    return out;
}

// The ten benchmark datasets with their published dimensions. Files are
// optional external inputs looked up under a data directory.
struct BenchmarkInfo {
    std::string name;
    int instances = 0;
    int features = 0;
};

inline const std::vector<BenchmarkInfo>& benchmark_table() {
    static const std::vector<BenchmarkInfo> table = {
        {"digit1", 1500, 241},      {"g241c", 1500, 241},   {"g241n", 1500, 241},
        {"letter-DvsP", 1608, 16},  {"letter-UvsV", 1577, 16}, {"USPS", 1500, 241},
        {"splice", 2991, 60},       {"ringnorm", 2000, 20}, {"spambase", 2000, 57},
        {"MNIST-3vs5", 2000, 784},
    };
    return table;
}

inline std::optional<BenchmarkInfo> find_benchmark(const std::string& name) {
    for (const auto& b : benchmark_table())
        if (b.name == name) return b;
    return std::nullopt;
}

inline std::string data_dir_from_env() {
    const char* v = std::getenv("ALEVS_DATA_DIR");
    return v ? std::string(v) : std::string();
}

// Candidate file for a benchmark: <dir>/<name>.csv (delimited, label last) or
// <dir>/<name>.libsvm (sparse index:value).
inline std::optional<std::string> find_benchmark_file(const std::string& name, const std::string& data_dir) {
    if (data_dir.empty()) return std::nullopt;
    for (const char* ext : {".csv", ".libsvm"}) {
        const std::filesystem::path p = std::filesystem::path(data_dir) / (name + ext);
        if (std::filesystem::exists(p)) return p.string();
    }
    return std::nullopt;
}

// Load a registered benchmark and verify its published dimensions.
inline Dataset load_benchmark(const std::string& name, const std::string& data_dir) {
    const auto info = find_benchmark(name);
    if (!info) throw std::invalid_argument("load_benchmark: unknown benchmark '" + name + "'");
    const auto file = find_benchmark_file(name, data_dir);
    if (!file) throw std::invalid_argument("load_benchmark: no file for '" + name + "' under '" + data_dir + "'");
    Dataset ds = file->ends_with(".libsvm") ? load_sparse_index(*file) : load_delimited(*file);
    ds.name = name;
    if (ds.size() != info->instances || ds.dim() != info->features)
        throw std::invalid_argument("load_benchmark: " + name + " is " + std::to_string(ds.size()) + "x" +
                                    std::to_string(ds.dim()) + ", expected " +
                                    std::to_string(info->instances) + "x" + std::to_string(info->features));
    return ds;
}

} // namespace alevs
