#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "format.hpp"
#include "relclust/clustering.hpp"
#include "relclust/error.hpp"
#include "relclust/kernels.hpp"

namespace relclust {

namespace {

// Above this many points the n x n distance matrix is not materialized and
// each silhouette evaluation recomputes distances.
constexpr std::size_t kMaxPrecomputedPoints = 6000;

std::vector<int> checked_compact(std::span<const int> labels, std::size_t n) {
    if (labels.size() != n) {
        throw Error(ErrorKind::Argument, "silhouette needs one label per point (" +
                                             std::to_string(labels.size()) + " labels, " +
                                             std::to_string(n) + " points)");
    }
    std::vector<int> compact(labels.begin(), labels.end());
    if (compact_labels(compact) < 2) {
        throw Error(ErrorKind::Argument, "silhouette needs at least 2 distinct labels");
    }
    return compact;
}

double mean_of(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) {
        s += v;
    }
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

std::uint64_t seed_for_k(std::uint64_t seed, int k) {
    // splitmix64 finalizer over (seed, k): per-k streams independent of the
    // order in which the grid is visited.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

double silhouette(MatrixView points, std::span<const int> labels) {
    const std::vector<int> compact = checked_compact(labels, points.rows);
    const int k = *std::max_element(compact.begin(), compact.end()) + 1;
    std::vector<double> s(points.rows);
    kernels::omp::silhouette_samples(points, compact, static_cast<std::size_t>(k), s);
    return mean_of(s);
}

double silhouette_precomputed(std::span<const double> distances, std::size_t n,
                              std::span<const int> labels) {
    if (distances.size() != n * n) {
        throw Error(ErrorKind::Argument, "distance matrix must be n x n");
    }
    const std::vector<int> compact = checked_compact(labels, n);
    const int k = *std::max_element(compact.begin(), compact.end()) + 1;
    std::vector<double> s(n);
    kernels::omp::silhouette_samples_precomputed(distances, n, compact, static_cast<std::size_t>(k), s);
    return mean_of(s);
}

double grid_bandwidth(std::span<const double> x) {
    if (x.size() < 2) {
        return 0.0;
    }
    std::vector<double> gaps;
    for (std::size_t i = 1; i < x.size(); ++i) {
        gaps.push_back(std::abs(x[i] - x[i - 1]));
    }
    std::sort(gaps.begin(), gaps.end());
    const std::size_t m = gaps.size() / 2;
    const double median = gaps.size() % 2 == 1 ? gaps[m] : 0.5 * (gaps[m - 1] + gaps[m]);
    return 2.0 * median;
}

std::vector<double> kernel_ridge_smooth(std::span<const double> x, std::span<const double> y,
                                        double bandwidth, double lambda,
                                        std::span<const double> at) {
    const auto n = static_cast<Eigen::Index>(x.size());
    if (x.size() != y.size() || x.empty()) {
        throw Error(ErrorKind::Argument, "kernel ridge needs matching, non-empty x and y");
    }
    if (!(bandwidth > 0.0) || !(lambda > 0.0)) {
        throw Error(ErrorKind::Argument, "kernel ridge needs positive bandwidth and lambda");
    }
    const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

    Eigen::MatrixXd gram(n, n);
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        target(i) = y[static_cast<std::size_t>(i)] - mean;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double diff = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            gram(i, j) = std::exp(-gamma * diff * diff);
        }
        gram(i, i) += lambda;
    }
    const Eigen::VectorXd alpha = gram.ldlt().solve(target);

    std::vector<double> out(at.size());
    for (std::size_t q = 0; q < at.size(); ++q) {
        double v = mean;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double diff = at[q] - x[static_cast<std::size_t>(j)];
            v += alpha(j) * std::exp(-gamma * diff * diff);
        }
        out[q] = v;
    }
    return out;
}

std::size_t chord_knee(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 3 || y.size() != n) {
        throw Error(ErrorKind::Argument, "knee detection needs at least 3 points");
    }
    // Both axes rescaled to [0, 1] so the chord distance is unit-free.
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    const double xspan = x[n - 1] - x[0];
    const double yspan = *ymax - *ymin;
    auto nx = [&](std::size_t i) { return xspan > 0 ? (x[i] - x[0]) / xspan : 0.0; };
    auto ny = [&](std::size_t i) { return yspan > 0 ? (y[i] - *ymin) / yspan : 0.0; };

    const double x0 = nx(0), y0 = ny(0), x1 = nx(n - 1), y1 = ny(n - 1);
    const double len = std::hypot(x1 - x0, y1 - y0);
    std::size_t best = 1;
    double best_d = -1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double cross = (x1 - x0) * (ny(i) - y0) - (y1 - y0) * (nx(i) - x0);
        const double dist = len > 0 ? std::abs(cross) / len : 0.0;
        if (dist > best_d) {
            best_d = dist;
            best = i;
        }
    }
    return best;
}

ElbowCurve select_elbow(std::vector<int> k_values, std::vector<double> silhouette_raw) {
    if (k_values.size() != silhouette_raw.size()) {
        throw Error(ErrorKind::Argument, "elbow curve lists differ in length");
    }
    if (k_values.size() < 4) {
        throw Error(ErrorKind::Argument, "the elbow rule needs at least 4 grid points");
    }
    if (std::adjacent_find(k_values.begin(), k_values.end(), std::greater_equal<int>()) != k_values.end()) {
        throw Error(ErrorKind::Argument, "grid values must be strictly increasing");
    }
    ElbowCurve curve;
    curve.k_values = std::move(k_values);
    curve.silhouette_raw = std::move(silhouette_raw);

    std::vector<double> x(curve.k_values.begin(), curve.k_values.end());
    curve.bandwidth = grid_bandwidth(x);
    curve.ridge_lambda = 1e-3 * static_cast<double>(x.size());
    curve.silhouette_smoothed =
        kernel_ridge_smooth(x, curve.silhouette_raw, curve.bandwidth, curve.ridge_lambda, x);

    // Locate the maximum of the smoothed curve on every integer k in range.
    const int k_lo = curve.k_values.front();
    const int k_hi = curve.k_values.back();
    std::vector<double> dense(static_cast<std::size_t>(k_hi - k_lo + 1));
    std::iota(dense.begin(), dense.end(), static_cast<double>(k_lo));
    const std::vector<double> fitted =
        kernel_ridge_smooth(x, curve.silhouette_raw, curve.bandwidth, curve.ridge_lambda, dense);
    const auto peak = static_cast<std::size_t>(std::max_element(fitted.begin(), fitted.end()) - fitted.begin());
    const int k_peak = k_lo + static_cast<int>(peak);

    if (k_peak > k_lo && k_peak < k_hi) {
        std::size_t nearest = 0;
        for (std::size_t i = 1; i < curve.k_values.size(); ++i) {
            if (std::abs(curve.k_values[i] - k_peak) < std::abs(curve.k_values[nearest] - k_peak)) {
                nearest = i;
            }
        }
        curve.k_hat = curve.k_values[nearest];
        curve.rule = "interior-max";
    } else if (k_peak == k_lo) {
        curve.k_hat = k_lo;
        curve.rule = "left-edge";
    } else {
        curve.k_hat = curve.k_values[chord_knee(x, curve.silhouette_smoothed)];
        curve.rule = "chord";
    }
    return curve;
}

std::vector<int> default_k_grid(std::size_t n) {
    std::vector<int> grid;
    const int cap = static_cast<int>(n) - 1;
    for (int k = 2; k <= 20; ++k) {
        grid.push_back(k);
    }
    for (int k = 24; k <= 60; k += 4) {
        grid.push_back(k);
    }
    const int top = static_cast<int>(2.0 * std::sqrt(static_cast<double>(n)));
    for (int k = 70; k <= top; k += 10) {
        grid.push_back(k);
    }
    grid.erase(std::remove_if(grid.begin(), grid.end(), [cap](int k) { return k > cap; }), grid.end());
    return grid;
}

ElbowCurve estimate_k_elbow(MatrixView points, std::span<const int> k_grid, std::uint64_t seed) {
    const std::size_t n = points.rows;
    std::set<int> unique(k_grid.begin(), k_grid.end());
    if (unique.size() < 4) {
        throw Error(ErrorKind::Argument, "the elbow rule needs at least 4 distinct grid points");
    }
    if (*unique.begin() < 2 || static_cast<std::size_t>(*unique.rbegin()) > n) {
        throw Error(ErrorKind::Argument, "grid values must lie in [2, n] (n = " + std::to_string(n) + ")");
    }

    std::vector<double> distances;
    if (n <= kMaxPrecomputedPoints) {
        distances.resize(n * n);
        kernels::omp::pairwise_distances(points, distances);
    }

    std::vector<int> ks(unique.begin(), unique.end());
    std::vector<double> scores;
    for (int k : ks) {
        const ClusterAssignment a = kmeans(points, k, seed_for_k(seed, k));
        if (a.k < 2) {
            throw Error(ErrorKind::Argument,
                        "degenerate geometry: k-means with k = " + std::to_string(k) +
                            " found a single distinct cluster, silhouette is undefined");
        }
        scores.push_back(distances.empty() ? silhouette(points, a.labels)
                                           : silhouette_precomputed(distances, n, a.labels));
    }
    return select_elbow(std::move(ks), std::move(scores));
}

std::pair<ElbowCurve, ClusterAssignment> cluster_auto(MatrixView points, std::uint64_t seed,
                                                      std::span<const int> k_grid) {
    if (points.rows < 10) {
        throw Error(ErrorKind::Argument, "automatic clustering needs at least 10 points");
    }
    const std::vector<int> grid =
        k_grid.empty() ? default_k_grid(points.rows) : std::vector<int>(k_grid.begin(), k_grid.end());
    ElbowCurve curve = estimate_k_elbow(points, grid, seed);
    ClusterAssignment a = kmeans(points, curve.k_hat, seed);
    a.method = ClusterMethod::KMeansElbow;
    a.params["k_hat"] = std::to_string(curve.k_hat);
    a.params["elbow_rule"] = curve.rule;
    a.params["bandwidth"] = format_double(curve.bandwidth);
    a.params["ridge_lambda"] = format_double(curve.ridge_lambda);
    std::string grid_text;
    for (int k : curve.k_values) {
        grid_text += (grid_text.empty() ? "" : ",") + std::to_string(k);
    }
    a.params["k_grid"] = grid_text;
    return {std::move(curve), std::move(a)};
}

}  // namespace relclust
