#ifndef MOBGRAPH_COMMON_HPP
#define MOBGRAPH_COMMON_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/**
 * @file common.hpp
 *
 * @brief Error type, dense matrix, seeded randomness and the stable hash shared by every stage.
 */

namespace mobgraph {

inline constexpr const char* version = "1.0.0";

enum class ErrorKind {
    MissingColumn,
    MalformedRow,
    DuplicateCommentId,
    EmptyChannel,
    MalformedGexf,
    DirectedGraphUnsupported,
    EmptyVocabulary,
    NonFiniteUpdate,
    ZeroVector,
    TooFewPoints,
    NoConvergence,
    NonFiniteCoordinate,
    InvalidK,
    SingleCluster,
    DegenerateVariance,
    CoincidentCentroids,
    CliqueBudgetExceeded,
    MissingLabel,
    InvalidConfig,
    Io
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::DuplicateCommentId: return "DuplicateCommentId";
    case ErrorKind::EmptyChannel: return "EmptyChannel";
    case ErrorKind::MalformedGexf: return "MalformedGexf";
    case ErrorKind::DirectedGraphUnsupported: return "DirectedGraphUnsupported";
    case ErrorKind::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorKind::NonFiniteUpdate: return "NonFiniteUpdate";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorKind::InvalidK: return "InvalidK";
    case ErrorKind::SingleCluster: return "SingleCluster";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::CoincidentCentroids: return "CoincidentCentroids";
    case ErrorKind::CliqueBudgetExceeded: return "CliqueBudgetExceeded";
    case ErrorKind::MissingLabel: return "MissingLabel";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/**
 * @brief Exception thrown by every module.
 *
 * `kind()` identifies the failure class; `what()` carries the detail,
 * prefixed by the kind name.
 */
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

/**
 * @brief Row-major dense matrix of doubles.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

/**
 * 64-bit FNV-1a. Pinned: changing it changes every WL token and every derived seed.
 */
inline std::uint64_t stable_hash(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/**
 * SplitMix64 finalizer, used to decorrelate derived seeds.
 */
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    return mix64(seed ^ stable_hash(tag));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(mix64(seed) ^ (index + 0x632be59bd9b4e019ULL));
}

/**
 * @brief Seeded generator with platform-independent draws.
 *
 * The standard distributions are implementation-defined, so the helpers below
 * derive every variate directly from the engine's raw 64-bit output.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), rejection-sampled so it is unbiased.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Shortest round-trip decimal rendering, stable across runs.
inline std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

} // namespace mobgraph

#endif // MOBGRAPH_COMMON_HPP
