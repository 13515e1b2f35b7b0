#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace relclust::kernels::detail {

// Pairwise tree reduction: acc[l] += acc[l + W] for W = N/2, N/4, ..., 1.
template <std::size_t W>
inline void fold_lanes(double* acc) {
    if constexpr (W > 0) {
        for (std::size_t l = 0; l < W; ++l) {
            acc[l] += acc[l + W];
        }
        fold_lanes<W / 2>(acc);
    }
}

// Squared distances from `a` to Q vectors at once, accumulated in double.
// Every query goes through the same lanes and the same reduction order, so
// the value for a pair never depends on Q or on the caller.
template <std::size_t Q, typename T>
inline void squared_distance_many(const float* a, const T* const* b, std::size_t d, double* out) {
    constexpr std::size_t kLanes = 32;
    constexpr std::size_t kShort = 8;
    double acc[Q][kLanes] = {};
    double acc_short[Q][kShort] = {};
    double tail[Q] = {};
    std::size_t j = 0;
    for (; j + kLanes <= d; j += kLanes) {
        for (std::size_t q = 0; q < Q; ++q) {
            for (std::size_t l = 0; l < kLanes; ++l) {
                const double diff = static_cast<double>(a[j + l]) - static_cast<double>(b[q][j + l]);
                acc[q][l] += diff * diff;
            }
        }
    }
    for (; j + kShort <= d; j += kShort) {
        for (std::size_t q = 0; q < Q; ++q) {
            for (std::size_t l = 0; l < kShort; ++l) {
                const double diff = static_cast<double>(a[j + l]) - static_cast<double>(b[q][j + l]);
                acc_short[q][l] += diff * diff;
            }
        }
    }
    for (; j < d; ++j) {
        for (std::size_t q = 0; q < Q; ++q) {
            const double diff = static_cast<double>(a[j]) - static_cast<double>(b[q][j]);
            tail[q] += diff * diff;
        }
    }
    for (std::size_t q = 0; q < Q; ++q) {
        fold_lanes<kLanes / 2>(acc[q]);
        fold_lanes<kShort / 2>(acc_short[q]);
        out[q] = (acc[q][0] + acc_short[q][0]) + tail[q];
    }
}

// out[q] = |a - rows_q|^2 for m contiguous rows of length d.
template <typename T>
inline void squared_distances_row(const float* a, const T* rows, std::size_t m, std::size_t d, double* out) {
    std::size_t q = 0;
    for (; q + 4 <= m; q += 4) {
        const T* b[4] = {rows + q * d, rows + (q + 1) * d, rows + (q + 2) * d, rows + (q + 3) * d};
        squared_distance_many<4>(a, b, d, out + q);
    }
    for (; q < m; ++q) {
        const T* b[1] = {rows + q * d};
        squared_distance_many<1>(a, b, d, out + q);
    }
}

// Index of the first minimum and its value.
inline std::pair<std::size_t, double> argmin(const double* v, std::size_t m) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m; ++c) {
        if (v[c] < v[best]) {
            best = c;
        }
    }
    return {best, v[best]};
}

// s(i) from per-cluster distance sums of one point; see silhouette_samples.
double silhouette_from_sums(std::span<const double> sums, std::span<const std::size_t> sizes,
                            int own);

std::vector<std::size_t> cluster_sizes(std::span<const int> labels, std::size_t k);

}  // namespace relclust::kernels::detail
