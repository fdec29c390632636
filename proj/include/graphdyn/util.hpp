#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace graphdyn {

enum class LossKind { kMae, kMse };

inline std::string to_string(LossKind kind) {
    return kind == LossKind::kMae ? "mae" : "mse";
}

inline LossKind loss_kind_from_string(std::string_view s) {
    if (s == "mae") return LossKind::kMae;
    if (s == "mse") return LossKind::kMse;
    throw std::invalid_argument("unknown loss kind: " + std::string(s));
}

/// Dense row-major matrix. Used for time x vertex tables and the SIR
/// transformation matrix; sparse structures stay in the graph module.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }
    std::span<double> row(std::size_t r) {
        return {data.data() + r * cols, cols};
    }
};

using MaskVector = std::vector<std::uint8_t>;

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Deterministic randomness. std::mt19937_64 is portable, but the standard
// distributions are not, so sampling is done from raw engine output.
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of the engine output.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller (two engine draws per sample).
inline double normal(Rng& rng) {
    const double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// In-place Fisher-Yates shuffle driven directly by the engine.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

inline std::vector<std::size_t> index_range(std::size_t count) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    return idx;
}

namespace detail {

inline std::string strip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    return s.substr(b);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// FNV-1a hashing, used for topology hashes and config provenance.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                           std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ull) {
    return fnv1a({reinterpret_cast<const unsigned char*>(s.data()), s.size()}, seed);
}

inline std::uint64_t fnv1a_u64(std::uint64_t value, std::uint64_t seed = 0xcbf29ce484222325ull) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
    return fnv1a({bytes, 8}, seed);
}

/// Derive an independent stream seed from a base seed and a role tag.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    return fnv1a(tag, fnv1a_u64(base));
}

// ---------------------------------------------------------------------------
// Small SPD solver (Cholesky). Enough for the ridge normal equations; the
// test suite checks it against an independent pivoted elimination oracle.
// ---------------------------------------------------------------------------

/// Solve A X = B for SPD A (n x n), B n x m, in place over copies.
inline DenseMatrix solve_spd(DenseMatrix a, DenseMatrix b) {
    if (a.rows != a.cols || a.rows != b.rows)
        throw std::invalid_argument("solve_spd: shape mismatch");
    const std::size_t n = a.rows;
    // In-place Cholesky: A = L L^T, lower triangle.
    for (std::size_t j = 0; j < n; ++j) {
        double d = a.at(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
        if (!(d > 0.0))
            throw std::runtime_error("solve_spd: matrix not positive definite");
        const double ljj = std::sqrt(d);
        a.at(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
            a.at(i, j) = s / ljj;
        }
    }
    // Forward then backward substitution per column of B.
    for (std::size_t c = 0; c < b.cols; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = b.at(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= a.at(i, k) * b.at(k, c);
            b.at(i, c) = s / a.at(i, i);
        }
        for (std::size_t ii = n; ii > 0; --ii) {
            const std::size_t i = ii - 1;
            double s = b.at(i, c);
            for (std::size_t k = i + 1; k < n; ++k) s -= a.at(k, i) * b.at(k, c);
            b.at(i, c) = s / a.at(i, i);
        }
    }
    return b;
}

}  // namespace graphdyn
