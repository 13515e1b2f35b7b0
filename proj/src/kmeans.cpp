#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "format.hpp"
#include "relclust/clustering.hpp"
#include "relclust/error.hpp"
#include "relclust/kernels.hpp"

namespace relclust {

std::string_view to_string(ClusterMethod method) {
    switch (method) {
        case ClusterMethod::KMeans: return "kmeans";
        case ClusterMethod::Optics: return "optics";
        case ClusterMethod::KMeansElbow: return "kmeans_elbow";
    }
    return "kmeans";
}

ClusterMethod parse_cluster_method(std::string_view text) {
    for (ClusterMethod m : {ClusterMethod::KMeans, ClusterMethod::Optics, ClusterMethod::KMeansElbow}) {
        if (text == to_string(m)) {
            return m;
        }
    }
    throw Error(ErrorKind::Format, "unknown clustering method '" + std::string(text) + "'");
}

int compact_labels(std::span<int> labels) {
    std::unordered_map<int, int> remap;
    for (int& l : labels) {
        auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
        l = it->second;
    }
    return static_cast<int>(remap.size());
}

namespace {

struct Run {
    std::vector<int> labels;
    std::vector<double> centroids;
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> history;
};

double serial_sum(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) {
        s += v;
    }
    return s;
}

// Greedy k-means++: each new center is the best of 2 + ln(k) D^2-sampled
// candidates, judged by the resulting potential.
std::vector<double> kmeanspp(MatrixView points, int k, std::mt19937_64& rng) {
    const std::size_t n = points.rows;
    const std::size_t d = points.cols;
    const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));

    std::vector<double> centroids(static_cast<std::size_t>(k) * d);
    auto set_center = [&](int c, std::size_t idx) {
        const auto row = points.row(idx);
        std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
    };

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::size_t first = pick(rng);
    set_center(0, first);
    std::vector<double> closest(n);
    kernels::omp::squared_distances_from(points, points.row(first), closest);
    double potential = serial_sum(closest);

    std::vector<double> cumulative(n);
    std::vector<std::size_t> cand_idx(static_cast<std::size_t>(trials));
    std::vector<float> cand_rows(static_cast<std::size_t>(trials) * d);
    std::vector<double> cand_dist(n * static_cast<std::size_t>(trials));
    std::vector<double> trial_dist(n);
    std::vector<double> best_dist(n);
    for (int c = 1; c < k; ++c) {
        std::partial_sum(closest.begin(), closest.end(), cumulative.begin());
        for (std::size_t t = 0; t < cand_idx.size(); ++t) {
            std::size_t idx;
            if (potential > 0.0) {
                const double target = unit(rng) * potential;
                idx = static_cast<std::size_t>(
                    std::upper_bound(cumulative.begin(), cumulative.end(), target) - cumulative.begin());
                idx = std::min(idx, n - 1);
            } else {
                idx = pick(rng);
            }
            cand_idx[t] = idx;
            const auto row = points.row(idx);
            std::copy(row.begin(), row.end(), cand_rows.begin() + static_cast<std::ptrdiff_t>(t * d));
        }
        kernels::omp::squared_distances_to(points, MatrixView(cand_rows, cand_idx.size(), d), cand_dist);

        double best_potential = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t t = 0; t < cand_idx.size(); ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                trial_dist[i] = std::min(cand_dist[i * cand_idx.size() + t], closest[i]);
            }
            const double pot = serial_sum(trial_dist);
            if (pot < best_potential) {
                best_potential = pot;
                best_idx = cand_idx[t];
                best_dist.swap(trial_dist);
            }
        }
        set_center(c, best_idx);
        closest.swap(best_dist);
        potential = best_potential;
    }
    return centroids;
}

Run lloyd(MatrixView points, int k, std::mt19937_64& rng, const KMeansOptions& options) {
    const std::size_t n = points.rows;
    const std::size_t d = points.cols;
    const std::size_t kk = static_cast<std::size_t>(k);

    Run run;
    run.centroids = kmeanspp(points, k, rng);
    run.labels.assign(n, 0);
    std::vector<int> previous(n, -1);
    std::vector<double> dist2(n);
    std::vector<double> sums(kk * d);
    std::vector<std::size_t> counts(kk);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        kernels::omp::assign_nearest(points, run.centroids, kk, run.labels, dist2);
        run.inertia = serial_sum(dist2);
        if (options.record_inertia) {
            run.history.push_back(run.inertia);
        }
        run.iterations = iter + 1;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(run.labels[i]);
            const auto row = points.row(i);
            double* s = sums.data() + c * d;
            for (std::size_t j = 0; j < d; ++j) {
                s[j] += row[j];
            }
            ++counts[c];
        }

        // Reseed each empty cluster with the point farthest from its centroid.
        // Identical points leave nothing to take, so the cluster stays empty.
        for (std::size_t c = 0; c < kk; ++c) {
            if (counts[c] != 0) {
                continue;
            }
            std::size_t far = n;
            double far_d = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (dist2[i] > far_d && counts[static_cast<std::size_t>(run.labels[i])] > 1) {
                    far_d = dist2[i];
                    far = i;
                }
            }
            if (far == n) {
                continue;
            }
            const auto old = static_cast<std::size_t>(run.labels[far]);
            const auto row = points.row(far);
            for (std::size_t j = 0; j < d; ++j) {
                sums[old * d + j] -= row[j];
                sums[c * d + j] = row[j];
            }
            --counts[old];
            counts[c] = 1;
            run.labels[far] = static_cast<int>(c);
            dist2[far] = 0.0;
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < kk; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            double moved = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double updated = sums[c * d + j] / static_cast<double>(counts[c]);
                const double delta = updated - run.centroids[c * d + j];
                moved += delta * delta;
                run.centroids[c * d + j] = updated;
            }
            shift = std::max(shift, std::sqrt(moved));
        }

        const bool stable = run.labels == previous;
        previous = run.labels;
        if (shift < options.tol || stable) {
            break;
        }
    }

    // Final assignment against the final centroids.
    kernels::omp::assign_nearest(points, run.centroids, kk, run.labels, dist2);
    run.inertia = serial_sum(dist2);
    return run;
}

}  // namespace

KMeansResult kmeans_fit(MatrixView points, int k, std::uint64_t seed, const KMeansOptions& options) {
    if (k <= 0) {
        throw Error(ErrorKind::Argument, "k must be positive, got " + std::to_string(k));
    }
    if (static_cast<std::size_t>(k) > points.rows) {
        throw Error(ErrorKind::Argument, "k = " + std::to_string(k) + " exceeds the number of points (" +
                                             std::to_string(points.rows) + ")");
    }
    if (options.n_init < 1 || options.max_iter < 1) {
        throw Error(ErrorKind::Argument, "n_init and max_iter must be positive");
    }

    std::mt19937_64 rng(seed);
    Run best;
    bool have_best = false;
    for (int r = 0; r < options.n_init; ++r) {
        Run run = lloyd(points, k, rng, options);
        if (!have_best || run.inertia < best.inertia) {
            best = std::move(run);
            have_best = true;
        }
    }

    // Drop clusters that ended up empty and renumber by ascending old id.
    const std::size_t d = points.cols;
    std::vector<int> used(static_cast<std::size_t>(k), 0);
    for (int l : best.labels) {
        used[static_cast<std::size_t>(l)] = 1;
    }
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    std::vector<double> centroids;
    int next = 0;
    for (std::size_t c = 0; c < used.size(); ++c) {
        if (used[c]) {
            remap[c] = next++;
            centroids.insert(centroids.end(), best.centroids.begin() + static_cast<std::ptrdiff_t>(c * d),
                             best.centroids.begin() + static_cast<std::ptrdiff_t>((c + 1) * d));
        }
    }
    for (int& l : best.labels) {
        l = remap[static_cast<std::size_t>(l)];
    }

    KMeansResult result;
    result.assignment.labels = std::move(best.labels);
    result.assignment.k = next;
    result.assignment.method = ClusterMethod::KMeans;
    result.assignment.seed = seed;
    result.assignment.params = {
        {"init", "k-means++ (greedy)"},
        {"k_requested", std::to_string(k)},
        {"max_iter", std::to_string(options.max_iter)},
        {"tol", format_double(options.tol)},
        {"n_init", std::to_string(options.n_init)},
        {"iterations", std::to_string(best.iterations)},
        {"inertia", format_double(best.inertia)},
    };
    result.centroids = std::move(centroids);
    result.inertia = best.inertia;
    result.iterations = best.iterations;
    result.inertia_history = std::move(best.history);
    return result;
}

ClusterAssignment kmeans(MatrixView points, int k, std::uint64_t seed) {
    return kmeans_fit(points, k, seed).assignment;
}

}  // namespace relclust
