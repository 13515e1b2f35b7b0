#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relclust/matrix.hpp"

namespace relclust {

enum class ClusterMethod { KMeans, Optics, KMeansElbow };

std::string_view to_string(ClusterMethod method);
ClusterMethod parse_cluster_method(std::string_view text);

struct ClusterAssignment {
    std::vector<int> labels;  // ids form the contiguous range [0, k)
    int k = 0;
    ClusterMethod method = ClusterMethod::KMeans;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> params;
    // Row identities, filled when the assignment comes from an EmbeddingMatrix.
    std::vector<std::string> instance_ids;

    bool operator==(const ClusterAssignment&) const = default;
};

// Remaps arbitrary non-negative ids to [0, k) in order of first appearance.
// Returns k.
int compact_labels(std::span<int> labels);

// ---- k-means -------------------------------------------------------------

struct KMeansOptions {
    int max_iter = 300;
    double tol = 1e-6;  // stop once no centroid moves farther than this
    // Independent k-means++ restarts; the lowest final inertia wins.
    int n_init = 10;
    bool record_inertia = false;
};

struct KMeansResult {
    ClusterAssignment assignment;
    std::vector<double> centroids;  // k x d, row-major, indexed by final label
    double inertia = 0.0;
    int iterations = 0;
    // Inertia after each assignment step of the winning run (record_inertia).
    std::vector<double> inertia_history;
};

// Lloyd iterations from greedy k-means++ seeding. Deterministic given seed.
KMeansResult kmeans_fit(MatrixView points, int k, std::uint64_t seed,
                        const KMeansOptions& options = {});
ClusterAssignment kmeans(MatrixView points, int k, std::uint64_t seed);

// ---- OPTICS --------------------------------------------------------------

struct OpticsOptions {
    int min_samples = 5;
    double xi = 0.05;
    int min_cluster_size = 0;  // 0 means min_samples
};

struct OpticsResult {
    std::vector<std::size_t> ordering;
    std::vector<double> reachability;   // indexed by point, +inf when undefined
    std::vector<double> core_distances;
    std::vector<long> predecessor;      // -1 when undefined
    std::vector<std::pair<std::size_t, std::size_t>> clusters;  // ordering ranges, inclusive
    std::size_t noise_points = 0;
    ClusterAssignment assignment;
};

// Reachability ordering plus xi-steepness cluster extraction. Noise points
// become singleton clusters so every instance carries an id.
OpticsResult optics_fit(MatrixView points, const OpticsOptions& options);
ClusterAssignment optics(MatrixView points, int min_samples);

// ---- silhouette and k estimation ----------------------------------------

// Mean silhouette coefficient with euclidean distance. Labels need not be
// contiguous. Throws Error(Argument) when fewer than two distinct labels.
double silhouette(MatrixView points, std::span<const int> labels);
double silhouette_precomputed(std::span<const double> distances, std::size_t n,
                              std::span<const int> labels);

struct ElbowCurve {
    std::vector<int> k_values;
    std::vector<double> silhouette_raw;
    std::vector<double> silhouette_smoothed;
    int k_hat = 0;
    double bandwidth = 0.0;
    double ridge_lambda = 0.0;
    std::string rule;  // "interior-max", "left-edge" or "chord"
};

// Gaussian-kernel ridge regression of y on x, evaluated at `at`. The target
// is centred before fitting and the mean added back.
std::vector<double> kernel_ridge_smooth(std::span<const double> x, std::span<const double> y,
                                        double bandwidth, double lambda,
                                        std::span<const double> at);

// Smoothing bandwidth for a sorted grid: twice the median spacing between
// consecutive grid values.
double grid_bandwidth(std::span<const double> x);

// Index of the point with the largest distance to the chord joining the first
// and last points, restricted to interior points.
std::size_t chord_knee(std::span<const double> x, std::span<const double> y);

// Locates k_hat on an already-measured (k, silhouette) curve.
ElbowCurve select_elbow(std::vector<int> k_values, std::vector<double> silhouette_raw);

// {2..20}, {24..60 step 4}, {70..2*sqrt(n) step 10}, capped at n - 1.
std::vector<int> default_k_grid(std::size_t n);

// Runs k-means for each grid value (seeded per k, so evaluation order does
// not matter) and applies select_elbow.
ElbowCurve estimate_k_elbow(MatrixView points, std::span<const int> k_grid, std::uint64_t seed);

// Elbow estimate followed by k-means at k_hat. An empty grid selects
// default_k_grid(n).
std::pair<ElbowCurve, ClusterAssignment> cluster_auto(MatrixView points, std::uint64_t seed,
                                                      std::span<const int> k_grid = {});

}  // namespace relclust
