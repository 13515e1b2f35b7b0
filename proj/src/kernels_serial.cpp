#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "relclust/kernels.hpp"

#include "kernels_detail.hpp"

namespace relclust::kernels {

double squared_distance(std::span<const float> a, std::span<const float> b) {
    const float* rows[1] = {b.data()};
    double out;
    detail::squared_distance_many<1>(a.data(), rows, a.size(), &out);
    return out;
}

double squared_distance(std::span<const float> a, std::span<const double> b) {
    const double* rows[1] = {b.data()};
    double out;
    detail::squared_distance_many<1>(a.data(), rows, a.size(), &out);
    return out;
}

namespace detail {

double silhouette_from_sums(std::span<const double> sums, std::span<const std::size_t> sizes, int own) {
    const std::size_t own_size = sizes[static_cast<std::size_t>(own)];
    if (own_size <= 1) {
        return 0.0;
    }
    const double a = sums[static_cast<std::size_t>(own)] / static_cast<double>(own_size - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
        if (static_cast<int>(c) != own && sizes[c] > 0) {
            b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        }
    }
    const double denom = std::max(a, b);
    return denom > 0.0 && std::isfinite(b) ? (b - a) / denom : 0.0;
}

std::vector<std::size_t> cluster_sizes(std::span<const int> labels, std::size_t k) {
    std::vector<std::size_t> sizes(k, 0);
    for (int l : labels) {
        ++sizes[static_cast<std::size_t>(l)];
    }
    return sizes;
}

}  // namespace detail

namespace serial {

using detail::cluster_sizes;
using detail::silhouette_from_sums;

void assign_nearest(MatrixView points, std::span<const double> centroids, std::size_t k,
                    std::span<int> labels, std::span<double> dist2) {
    std::vector<double> row_dist(k);
    for (std::size_t i = 0; i < points.rows; ++i) {
        detail::squared_distances_row(points.row(i).data(), centroids.data(), k, points.cols, row_dist.data());
        const auto [c, v] = detail::argmin(row_dist.data(), k);
        labels[i] = static_cast<int>(c);
        dist2[i] = v;
    }
}

void squared_distances_from(MatrixView points, std::span<const float> query, std::span<double> out) {
    for (std::size_t i = 0; i < points.rows; ++i) {
        out[i] = squared_distance(points.row(i), query);
    }
}

void squared_distances_to(MatrixView points, MatrixView queries, std::span<double> out) {
    const std::size_t m = queries.rows;
    for (std::size_t i = 0; i < points.rows; ++i) {
        detail::squared_distances_row(points.row(i).data(), queries.data.data(), m, points.cols, &out[i * m]);
    }
}

void distances_from(MatrixView points, std::span<const float> query, std::span<double> out) {
    for (std::size_t i = 0; i < points.rows; ++i) {
        out[i] = std::sqrt(squared_distance(points.row(i), query));
    }
}

void pairwise_distances(MatrixView points, std::span<double> out) {
    const std::size_t n = points.rows;
    for (std::size_t i = 0; i < n; ++i) {
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
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                sums[static_cast<std::size_t>(labels[j])] +=
                    std::sqrt(squared_distance(points.row(i), points.row(j)));
            }
        }
        out[i] = silhouette_from_sums(sums, sizes, labels[i]);
    }
}

void silhouette_samples_precomputed(std::span<const double> distances, std::size_t n,
                                    std::span<const int> labels, std::size_t k,
                                    std::span<double> out) {
    const std::vector<std::size_t> sizes = cluster_sizes(labels, k);
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                sums[static_cast<std::size_t>(labels[j])] += distances[i * n + j];
            }
        }
        out[i] = silhouette_from_sums(sums, sizes, labels[i]);
    }
}

}  // namespace serial


}  // namespace relclust::kernels
