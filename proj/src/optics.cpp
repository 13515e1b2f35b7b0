#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "format.hpp"
#include "relclust/clustering.hpp"
#include "relclust/error.hpp"
#include "relclust/kernels.hpp"

namespace relclust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Index = std::ptrdiff_t;

std::vector<double> core_distances(MatrixView points, int min_samples) {
    const std::size_t n = points.rows;
    std::vector<double> core(n);
    const auto nth = static_cast<std::ptrdiff_t>(min_samples - 1);  // self counts as neighbour 1
#pragma omp parallel
    {
        std::vector<double> dist(n);
#pragma omp for schedule(dynamic, 16)
        for (Index ii = 0; ii < static_cast<Index>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const auto row = points.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                dist[j] = std::sqrt(kernels::squared_distance(row, points.row(j)));
            }
            std::nth_element(dist.begin(), dist.begin() + nth, dist.end());
            core[i] = dist[static_cast<std::size_t>(nth)];
        }
    }
    return core;
}

struct Region {
    std::size_t start;
    std::size_t end;
    double mib;
};

// Grows a steep area from `start`, tolerating at most min_samples
// consecutive points that continue in the same direction without being steep.
std::size_t extend_region(const std::vector<char>& steep, const std::vector<char>& xward,
                          std::size_t start, int min_samples) {
    int non_xward = 0;
    std::size_t end = start;
    for (std::size_t index = start; index < steep.size(); ++index) {
        if (steep[index]) {
            non_xward = 0;
            end = index;
        } else if (!xward[index]) {
            ++non_xward;
            if (non_xward > min_samples) {
                break;
            }
        } else {
            return end;
        }
    }
    return end;
}

void update_filter_sdas(std::vector<Region>& sdas, double mib, double xi_complement,
                        const std::vector<double>& plot) {
    if (std::isinf(mib)) {
        sdas.clear();
        return;
    }
    std::vector<Region> kept;
    for (Region r : sdas) {
        if (mib <= plot[r.start] * xi_complement) {
            r.mib = std::max(r.mib, mib);
            kept.push_back(r);
        }
    }
    sdas.swap(kept);
}

std::optional<std::pair<std::size_t, std::size_t>> correct_predecessor(
    const std::vector<double>& plot, const std::vector<long>& predecessor_plot,
    const std::vector<std::size_t>& ordering, std::size_t s, std::size_t e) {
    while (s < e) {
        if (plot[s] > plot[e]) {
            return std::make_pair(s, e);
        }
        const long p_e = predecessor_plot[e];
        for (std::size_t i = s; i < e; ++i) {
            if (p_e == static_cast<long>(ordering[i])) {
                return std::make_pair(s, e);
            }
        }
        --e;
    }
    return std::nullopt;
}

// Xi-steepness extraction over the reachability plot. Clusters are returned
// as inclusive ranges of ordering positions, children before parents.
std::vector<std::pair<std::size_t, std::size_t>> xi_clusters(
    std::vector<double> plot, const std::vector<long>& predecessor_plot,
    const std::vector<std::size_t>& ordering, double xi, int min_samples, int min_cluster_size) {
    const std::size_t n = plot.size();
    plot.push_back(kInf);  // lets a cluster close at the end of the plot

    const double xi_complement = 1.0 - xi;
    std::vector<char> steep_up(n), steep_down(n), up(n), down(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ratio = plot[i] / plot[i + 1];  // NaN compares false everywhere
        steep_up[i] = ratio <= xi_complement;
        steep_down[i] = ratio >= 1.0 / xi_complement;
        down[i] = ratio > 1.0;
        up[i] = ratio < 1.0;
    }

    std::vector<Region> sdas;
    std::vector<std::pair<std::size_t, std::size_t>> clusters;
    std::size_t index = 0;
    double mib = 0.0;

    for (std::size_t steep_index = 0; steep_index < n; ++steep_index) {
        if (!(steep_up[steep_index] || steep_down[steep_index]) || steep_index < index) {
            continue;
        }
        for (std::size_t i = index; i <= steep_index; ++i) {
            mib = std::max(mib, plot[i]);
        }

        if (steep_down[steep_index]) {
            update_filter_sdas(sdas, mib, xi_complement, plot);
            const std::size_t d_end = extend_region(steep_down, up, steep_index, min_samples);
            sdas.push_back({steep_index, d_end, 0.0});
            index = d_end + 1;
            mib = plot[index];
            continue;
        }

        update_filter_sdas(sdas, mib, xi_complement, plot);
        const std::size_t u_start = steep_index;
        const std::size_t u_end = extend_region(steep_up, down, u_start, min_samples);
        index = u_end + 1;
        mib = plot[index];

        std::vector<std::pair<std::size_t, std::size_t>> found;
        for (const Region& sda : sdas) {
            std::size_t c_start = sda.start;
            std::size_t c_end = u_end;

            if (plot[c_end + 1] * xi_complement < sda.mib) {
                continue;
            }
            const double d_max = plot[sda.start];
            if (d_max * xi_complement >= plot[c_end + 1]) {
                while (plot[c_start + 1] > plot[c_end + 1] && c_start < sda.end) {
                    ++c_start;
                }
            } else if (plot[c_end + 1] * xi_complement >= d_max) {
                while (c_end > u_start && plot[c_end - 1] > d_max) {
                    --c_end;
                }
            }

            auto corrected = correct_predecessor(plot, predecessor_plot, ordering, c_start, c_end);
            if (!corrected) {
                continue;
            }
            std::tie(c_start, c_end) = *corrected;

            if (c_end - c_start + 1 < static_cast<std::size_t>(min_cluster_size)) {
                continue;
            }
            if (c_start > sda.end || c_end < u_start) {
                continue;
            }
            found.emplace_back(c_start, c_end);
        }
        clusters.insert(clusters.end(), found.rbegin(), found.rend());
    }
    return clusters;
}

}  // namespace

OpticsResult optics_fit(MatrixView points, const OpticsOptions& options) {
    const std::size_t n = points.rows;
    if (options.min_samples < 2) {
        throw Error(ErrorKind::Argument, "min_samples must be at least 2");
    }
    if (static_cast<std::size_t>(options.min_samples) > n) {
        throw Error(ErrorKind::Argument, "min_samples = " + std::to_string(options.min_samples) +
                                             " exceeds the number of points (" + std::to_string(n) + ")");
    }
    if (!(options.xi > 0.0 && options.xi < 1.0)) {
        throw Error(ErrorKind::Argument, "xi must lie in (0, 1)");
    }
    const int min_cluster_size = options.min_cluster_size > 0 ? options.min_cluster_size : options.min_samples;

    OpticsResult result;
    result.core_distances = core_distances(points, options.min_samples);
    result.reachability.assign(n, kInf);
    result.predecessor.assign(n, -1);
    result.ordering.reserve(n);

    std::vector<char> processed(n, 0);
    std::vector<double> dist(n);
    for (std::size_t step = 0; step < n; ++step) {
        // Unprocessed point with the smallest reachability; lowest index on ties.
        std::size_t point = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (!processed[i] && (point == n || result.reachability[i] < result.reachability[point])) {
                point = i;
            }
        }
        processed[point] = 1;
        result.ordering.push_back(point);

        const double core = result.core_distances[point];
        kernels::omp::distances_from(points, points.row(point), dist);
        for (std::size_t i = 0; i < n; ++i) {
            if (processed[i]) {
                continue;
            }
            const double reach = std::max(dist[i], core);
            if (reach < result.reachability[i]) {
                result.reachability[i] = reach;
                result.predecessor[i] = static_cast<long>(point);
            }
        }
    }

    std::vector<double> plot(n);
    std::vector<long> predecessor_plot(n);
    for (std::size_t i = 0; i < n; ++i) {
        plot[i] = result.reachability[result.ordering[i]];
        predecessor_plot[i] = result.predecessor[result.ordering[i]];
    }
    result.clusters = xi_clusters(plot, predecessor_plot, result.ordering, options.xi,
                                  options.min_samples, min_cluster_size);

    // Label leaf clusters first; a range that already holds a label is a parent.
    std::vector<int> by_position(n, -1);
    int next = 0;
    for (const auto& [start, end] : result.clusters) {
        bool free = true;
        for (std::size_t i = start; i <= end; ++i) {
            free = free && by_position[i] == -1;
        }
        if (free) {
            std::fill(by_position.begin() + static_cast<std::ptrdiff_t>(start),
                      by_position.begin() + static_cast<std::ptrdiff_t>(end) + 1, next++);
        }
    }
    std::vector<int> labels(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        labels[result.ordering[i]] = by_position[i];
    }
    for (int& l : labels) {
        if (l == -1) {
            ++result.noise_points;
            l = next++;
        }
    }

    ClusterAssignment& a = result.assignment;
    a.labels = std::move(labels);
    a.k = compact_labels(a.labels);
    a.method = ClusterMethod::Optics;
    a.params = {
        {"min_samples", std::to_string(options.min_samples)},
        {"xi", format_double(options.xi)},
        {"min_cluster_size", std::to_string(min_cluster_size)},
        {"metric", "euclidean"},
        {"noise_points", std::to_string(result.noise_points)},
        {"noise_handling", "singleton clusters"},
    };
    return result;
}

ClusterAssignment optics(MatrixView points, int min_samples) {
    OpticsOptions options;
    options.min_samples = min_samples;
    return optics_fit(points, options).assignment;
}

}  // namespace relclust
