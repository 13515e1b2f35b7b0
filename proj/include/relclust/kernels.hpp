#pragma once

#include <cstddef>
#include <span>

#include "relclust/matrix.hpp"

// Data-parallel inner loops shared by the clustering code. Each kernel exists
// twice: `serial` is the plain reference kept for tests and benchmarks, `omp`
// is the OpenMP version the library calls. Both write every output slot from
// exactly one loop iteration and never reduce floating-point values across
// threads, so they agree bit for bit regardless of thread count.
namespace relclust::kernels {

// Squared euclidean distance accumulated in double.
double squared_distance(std::span<const float> a, std::span<const float> b);
double squared_distance(std::span<const float> a, std::span<const double> b);

namespace serial {

// labels[i] = argmin_c |x_i - c|^2 (lowest index wins ties); dist2[i] is that minimum.
void assign_nearest(MatrixView points, std::span<const double> centroids, std::size_t k,
                    std::span<int> labels, std::span<double> dist2);

// out[i] = |x_i - query|^2
void squared_distances_from(MatrixView points, std::span<const float> query,
                            std::span<double> out);

// out[i * m + q] = |x_i - query_q|^2 for the m rows of `queries`; one pass
// over the points serves every query.
void squared_distances_to(MatrixView points, MatrixView queries, std::span<double> out);

// out[i] = |x_i - query|
void distances_from(MatrixView points, std::span<const float> query, std::span<double> out);

// Full symmetric n x n euclidean distance matrix.
void pairwise_distances(MatrixView points, std::span<double> out);

// Per-point silhouette for labels in [0, k). Members of singleton clusters
// score 0, as does a point whose a and b are both 0.
void silhouette_samples(MatrixView points, std::span<const int> labels, std::size_t k,
                        std::span<double> out);
void silhouette_samples_precomputed(std::span<const double> distances, std::size_t n,
                                    std::span<const int> labels, std::size_t k,
                                    std::span<double> out);

}  // namespace serial

namespace omp {

// labels[i] = argmin_c |x_i - c|^2 (lowest index wins ties); dist2[i] is that minimum.
void assign_nearest(MatrixView points, std::span<const double> centroids, std::size_t k,
                    std::span<int> labels, std::span<double> dist2);

// out[i] = |x_i - query|^2
void squared_distances_from(MatrixView points, std::span<const float> query,
                            std::span<double> out);

// out[i * m + q] = |x_i - query_q|^2 for the m rows of `queries`; one pass
// over the points serves every query.
void squared_distances_to(MatrixView points, MatrixView queries, std::span<double> out);

// out[i] = |x_i - query|
void distances_from(MatrixView points, std::span<const float> query, std::span<double> out);

// Full symmetric n x n euclidean distance matrix.
void pairwise_distances(MatrixView points, std::span<double> out);

// Per-point silhouette for labels in [0, k). Members of singleton clusters
// score 0, as does a point whose a and b are both 0.
void silhouette_samples(MatrixView points, std::span<const int> labels, std::size_t k,
                        std::span<double> out);
void silhouette_samples_precomputed(std::span<const double> distances, std::size_t n,
                                    std::span<const int> labels, std::size_t k,
                                    std::span<double> out);

}  // namespace omp

}  // namespace relclust::kernels
