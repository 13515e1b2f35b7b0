#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "relclust/kernels.hpp"

#include "kernels_detail.hpp"

namespace relclust::kernels::omp {

using detail::cluster_sizes;
using detail::silhouette_from_sums;

namespace {

// OpenMP wants a signed loop variable for older runtimes.
using Index = std::ptrdiff_t;

}  // namespace

void assign_nearest(MatrixView points, std::span<const double> centroids, std::size_t k,
                    std::span<int> labels, std::span<double> dist2) {
    const Index n = static_cast<Index>(points.rows);
#pragma omp parallel
    {
        std::vector<double> row_dist(k);
#pragma omp for schedule(static)
        for (Index ii = 0; ii < n; ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            detail::squared_distances_row(points.row(i).data(), centroids.data(), k, points.cols,
                                          row_dist.data());
            const auto [c, v] = detail::argmin(row_dist.data(), k);
            labels[i] = static_cast<int>(c);
            dist2[i] = v;
        }
    }
}

void squared_distances_from(MatrixView points, std::span<const float> query, std::span<double> out) {
    const Index n = static_cast<Index>(points.rows);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = squared_distance(points.row(static_cast<std::size_t>(i)), query);
    }
}

void squared_distances_to(MatrixView points, MatrixView queries, std::span<double> out) {
    const Index n = static_cast<Index>(points.rows);
    const std::size_t m = queries.rows;
#pragma omp parallel for schedule(static)
    for (Index ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        detail::squared_distances_row(points.row(i).data(), queries.data.data(), m, points.cols, &out[i * m]);
    }
}

void distances_from(MatrixView points, std::span<const float> query, std::span<double> out) {
    const Index n = static_cast<Index>(points.rows);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            std::sqrt(squared_distance(points.row(static_cast<std::size_t>(i)), query));
    }
}

void pairwise_distances(MatrixView points, std::span<double> out) {
    const std::size_t n = points.rows;
    // Row i owns the slots (i, j) and (j, i) for j >= i.
#pragma omp parallel for schedule(dynamic, 8)
    for (Index ii = 0; ii < static_cast<Index>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        out[i * n + i] = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = std::sqrt(squared_distance(points.row(i), points.row(j)));
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
}

void silhouette_samples(MatrixView points, std::span<const int> labels, std::size_t k,
                        std::span<double> out) {
    const std::size_t n = points.rows;
    const std::vector<std::size_t> sizes = cluster_sizes(labels, k);
#pragma omp parallel
    {
        std::vector<double> sums(k);
#pragma omp for schedule(dynamic, 16)
        for (Index ii = 0; ii < static_cast<Index>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            std::fill(sums.begin(), sums.end(), 0.0);
            const auto row = points.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    sums[static_cast<std::size_t>(labels[j])] +=
                        std::sqrt(squared_distance(row, points.row(j)));
                }
            }
            out[i] = silhouette_from_sums(sums, sizes, labels[i]);
        }
    }
}

void silhouette_samples_precomputed(std::span<const double> distances, std::size_t n,
                                    std::span<const int> labels, std::size_t k,
                                    std::span<double> out) {
    const std::vector<std::size_t> sizes = cluster_sizes(labels, k);
#pragma omp parallel
    {
        std::vector<double> sums(k);
#pragma omp for schedule(static)
        for (Index ii = 0; ii < static_cast<Index>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            std::fill(sums.begin(), sums.end(), 0.0);
            const double* dist_row = distances.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    sums[static_cast<std::size_t>(labels[j])] += dist_row[j];
                }
            }
            out[i] = silhouette_from_sums(sums, sizes, labels[i]);
        }
    }
}

}  // namespace relclust::kernels::omp
