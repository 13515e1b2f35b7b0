#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <map>
#include <set>

#include "oracles.hpp"
#include "relclust/clustering.hpp"
#include "relclust/error.hpp"
#include "relclust/kernels.hpp"
#include "relclust/metrics.hpp"
#include "synth.hpp"

using namespace relclust;

namespace {

bool contiguous(const ClusterAssignment& a) {
    std::set<int> ids(a.labels.begin(), a.labels.end());
    return !ids.empty() && *ids.begin() == 0 && *ids.rbegin() == a.k - 1 &&
           ids.size() == static_cast<std::size_t>(a.k);
}

std::vector<std::vector<double>> rows_of(const synth::Blobs& b) {
    std::vector<std::vector<double>> out(b.n, std::vector<double>(b.dim));
    for (std::size_t i = 0; i < b.n; ++i)
        for (std::size_t j = 0; j < b.dim; ++j) out[i][j] = b.points[i * b.dim + j];
    return out;
}

// Dense Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        std::swap(a[c], a[p]);
        std::swap(b[c], b[p]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

}  // namespace

TEST_CASE("kmeans with k = 1 returns the column mean") {
    const auto b = synth::make_blobs(3, 20, 4, 9);
    const KMeansResult r = kmeans_fit(b.view(), 1, 0);
    CHECK(std::all_of(r.assignment.labels.begin(), r.assignment.labels.end(), [](int l) { return l == 0; }));
    for (std::size_t j = 0; j < b.dim; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < b.n; ++i) mean += b.points[i * b.dim + j];
        mean /= static_cast<double>(b.n);
        CHECK(r.centroids[j] == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("kmeans with k = n isolates every point") {
    const auto b = synth::make_blobs(2, 6, 3, 1);
    const KMeansResult r = kmeans_fit(b.view(), static_cast<int>(b.n), 0);
    CHECK(r.inertia == 0.0);
    CHECK(std::set<int>(r.assignment.labels.begin(), r.assignment.labels.end()).size() == b.n);
}

TEST_CASE("kmeans recovers two blobs") {
    const auto b = synth::make_blobs(2, 100, 8, 42, 20.0);
    const ClusterAssignment a = kmeans(b.view(), 2, 0);
    CHECK(contiguous(a));
    CHECK(ari(b.labels, a.labels) == 1.0);
}

TEST_CASE("kmeans inertia never increases and the seed fixes every bit") {
    const auto b = synth::make_blobs(6, 30, 5, 3, 3.0);
    KMeansOptions opt;
    opt.record_inertia = true;
    const KMeansResult r = kmeans_fit(b.view(), 6, 17, opt);
    REQUIRE_FALSE(r.inertia_history.empty());
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
        CHECK(r.inertia_history[i] <= r.inertia_history[i - 1]);
    }
    const KMeansResult again = kmeans_fit(b.view(), 6, 17, opt);
    CHECK(again.assignment == r.assignment);
    CHECK(again.centroids == r.centroids);
    CHECK(again.inertia == r.inertia);
    CHECK(contiguous(r.assignment));
    CHECK_THROWS_AS(kmeans(b.view(), 0, 0), Error);
    CHECK_THROWS_AS(kmeans(b.view(), static_cast<int>(b.n) + 1, 0), Error);
}

TEST_CASE("optics") {
    SUBCASE("two separated blobs") {
        // Uniform-density blobs: jittered 6 x 10 lattices, 100 apart. Gaussian
        // blobs fragment under xi extraction because their density varies.
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> jitter(-0.02, 0.02);
        std::vector<float> pts;
        std::vector<int> truth;
        for (int blob = 0; blob < 2; ++blob)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 10; ++j) {
                    pts.push_back(static_cast<float>(100 * blob + i + jitter(rng)));
                    pts.push_back(static_cast<float>(100 * blob + j + jitter(rng)));
                    truth.push_back(blob);
                }
        const OpticsResult r = optics_fit(MatrixView(pts, 120, 2), OpticsOptions{});
        CHECK(r.noise_points == 0);
        CHECK(r.assignment.k == 2);
        CHECK(contiguous(r.assignment));
        CHECK(ari(truth, r.assignment.labels) == 1.0);
        std::vector<std::size_t> order = r.ordering;
        std::sort(order.begin(), order.end());
        for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == i);
    }
    SUBCASE("gaussian blobs keep every instance") {
        const auto b = synth::make_blobs(2, 60, 2, 5, 30.0);
        const OpticsResult r = optics_fit(b.view(), OpticsOptions{});
        CHECK(contiguous(r.assignment));
        CHECK(r.assignment.labels.size() == b.n);
        // No cluster mixes the two blobs.
        std::map<int, std::set<int>> members;
        for (std::size_t i = 0; i < b.n; ++i) members[r.assignment.labels[i]].insert(b.labels[i]);
        for (const auto& [id, blobs] : members) CHECK(blobs.size() == 1);
    }
    SUBCASE("identical points") {
        const std::vector<float> pts(20 * 3, 1.5f);
        const ClusterAssignment a = optics(MatrixView(pts, 20, 3), 5);
        CHECK(a.k == 1);
        CHECK(a.labels == std::vector<int>(20, 0));
    }
}

TEST_CASE("silhouette") {
    const std::vector<float> line = {0, 1, 10, 11};
    const std::vector<int> labels = {0, 0, 1, 1};
    // Outer points: a = 1, b = 10.5. Inner points: a = 1, b = 9.5.
    std::vector<double> per_point(4);
    kernels::serial::silhouette_samples(MatrixView(line, 4, 1), labels, 2, per_point);
    CHECK(std::abs(per_point[0] - 9.5 / 10.5) < 1e-12);
    CHECK(std::abs(per_point[1] - 8.5 / 9.5) < 1e-12);
    CHECK(std::abs(per_point[2] - 8.5 / 9.5) < 1e-12);
    CHECK(std::abs(per_point[3] - 9.5 / 10.5) < 1e-12);
    CHECK(std::abs(silhouette(MatrixView(line, 4, 1), labels) - (9.5 / 10.5 + 8.5 / 9.5) / 2.0) < 1e-12);
    CHECK(silhouette(MatrixView(line, 4, 1), std::vector<int>{7, 7, 3, 3}) == silhouette(MatrixView(line, 4, 1), labels));

    const std::vector<float> two = {0, 5};
    CHECK(silhouette(MatrixView(two, 2, 1), std::vector<int>{0, 1}) == 0.0);
    CHECK_THROWS_AS(silhouette(MatrixView(line, 4, 1), std::vector<int>{0, 0, 0, 0}), Error);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto b = synth::make_blobs(3, 10, 3, rng(), 2.0);
        std::vector<int> lab(b.n);
        for (auto& l : lab) l = static_cast<int>(rng() % 4);
        if (std::set<int>(lab.begin(), lab.end()).size() < 2) continue;
        CHECK(silhouette(b.view(), lab) == doctest::Approx(oracle::silhouette(rows_of(b), lab)).epsilon(1e-12));
    }
}

TEST_CASE("kernel ridge matches a direct solve") {
    const std::vector<double> x = {2, 3, 4, 6, 8, 10, 14};
    const std::vector<double> y = {0.3, 0.5, 0.55, 0.52, 0.4, 0.38, 0.2};
    const double bw = 2.5, lambda = 0.01;
    const std::vector<double> at = {2, 5, 9, 14};
    const std::vector<double> got = kernel_ridge_smooth(x, y, bw, lambda, at);

    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    const std::size_t n = x.size();
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    std::vector<double> rhs(n);
    auto kern = [&](double a, double b) { return std::exp(-(a - b) * (a - b) / (2.0 * bw * bw)); };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i][j] = kern(x[i], x[j]) + (i == j ? lambda : 0.0);
        rhs[i] = y[i] - mean;
    }
    const std::vector<double> alpha = solve(k, rhs);
    for (std::size_t q = 0; q < at.size(); ++q) {
        double v = mean;
        for (std::size_t i = 0; i < n; ++i) v += alpha[i] * kern(at[q], x[i]);
        CHECK(got[q] == doctest::Approx(v).epsilon(1e-10));
    }
    CHECK(grid_bandwidth(std::vector<double>{2, 3, 4, 5, 7}) == 2.0);
}

TEST_CASE("elbow rule") {
    SUBCASE("ten blobs on a 2..30 grid") {
        const auto b = synth::make_blobs(10, 40, 6, 21);
        std::vector<int> grid;
        for (int k = 2; k <= 30; ++k) grid.push_back(k);
        const ElbowCurve c = estimate_k_elbow(b.view(), grid, 0);
        CHECK(c.k_hat >= 8);
        CHECK(c.k_hat <= 12);

        std::vector<int> shuffled = grid;
        std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
        const ElbowCurve s = estimate_k_elbow(b.view(), shuffled, 0);
        CHECK(s.k_values == c.k_values);
        CHECK(s.silhouette_raw == c.silhouette_raw);
        CHECK(s.k_hat == c.k_hat);
    }
    SUBCASE("monotone curve falls back to an interior chord point") {
        const std::vector<int> ks = {2, 4, 6, 8, 10, 12, 14};
        std::vector<double> ys;
        for (int k : ks) ys.push_back(0.1 + 0.05 * k);
        const ElbowCurve c = select_elbow(ks, ys);
        CHECK(c.rule == "chord");
        CHECK(c.k_hat > 2);
        CHECK(c.k_hat < 14);
        CHECK(std::find(ks.begin(), ks.end(), c.k_hat) != ks.end());
    }
    SUBCASE("grid checks") {
        CHECK_THROWS_AS(select_elbow({2, 3, 3, 4}, {0, 0, 0, 0}), Error);
        CHECK_THROWS_AS(select_elbow({2, 3, 4}, {0, 0, 0}), Error);
        const std::vector<int> g = default_k_grid(10000);
        CHECK(g.front() == 2);
        CHECK(std::find(g.begin(), g.end(), 20) != g.end());
        CHECK(std::find(g.begin(), g.end(), 24) != g.end());
        CHECK(std::find(g.begin(), g.end(), 21) == g.end());
        CHECK(g.back() == 200);
        CHECK(default_k_grid(12).back() == 11);
    }
}

TEST_CASE("cluster_auto") {
    const auto b = synth::make_blobs(10, 50, 8, 8);
    const auto [curve, a] = cluster_auto(b.view(), 0);
    CHECK(a.method == ClusterMethod::KMeansElbow);
    CHECK(a.k == curve.k_hat);
    CHECK(ari(b.labels, a.labels) >= 0.9);
    const auto [curve2, a2] = cluster_auto(b.view(), 0);
    CHECK(a2 == a);

    const std::vector<float> same(10 * 2, 3.0f);
    try {
        cluster_auto(MatrixView(same, 10, 2), 0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Argument);
        CHECK(std::string(e.what()).find("degenerate") != std::string::npos);
    }
}

TEST_CASE("compact_labels") {
    std::vector<int> l = {7, 3, 7, 9, 3};
    CHECK(compact_labels(l) == 3);
    CHECK(l == std::vector<int>{0, 1, 0, 2, 1});
}

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
    for (std::size_t dim : {1u, 7u, 8u, 33u, 77u}) {
        const auto b = synth::make_blobs(4, 25, dim, dim);
        const MatrixView v = b.view();
        const std::size_t n = b.n, k = 4;
        std::vector<double> centroids(k * dim);
        for (std::size_t i = 0; i < centroids.size(); ++i) centroids[i] = b.points[i] + 0.25;

        std::vector<int> l1(n), l2(n);
        std::vector<double> d1(n), d2(n);
        kernels::serial::assign_nearest(v, centroids, k, l1, d1);
        kernels::omp::assign_nearest(v, centroids, k, l2, d2);
        CHECK(l1 == l2);
        CHECK(d1 == d2);
        for (std::size_t c = 0; c < k; ++c) {
            CHECK(d1[c] <= kernels::squared_distance(v.row(c), std::span<const double>(centroids).subspan(c * dim, dim)));
        }

        std::vector<double> p1(n * n), p2(n * n);
        kernels::serial::pairwise_distances(v, p1);
        kernels::omp::pairwise_distances(v, p2);
        CHECK(p1 == p2);

        const MatrixView queries(std::span<const float>(b.points).subspan(0, 6 * dim), 6, dim);
        std::vector<double> t1(n * 6), t2(n * 6), single(n);
        kernels::serial::squared_distances_to(v, queries, t1);
        kernels::omp::squared_distances_to(v, queries, t2);
        CHECK(t1 == t2);
        bool blocked_matches_single = true;
        for (std::size_t q = 0; q < 6; ++q) {
            kernels::omp::squared_distances_from(v, queries.row(q), single);
            for (std::size_t i = 0; i < n; ++i) {
                blocked_matches_single &= single[i] == t1[i * 6 + q];
                blocked_matches_single &= single[i] == kernels::squared_distance(v.row(i), queries.row(q));
                blocked_matches_single &= std::sqrt(single[i]) == p1[i * n + q];
            }
        }
        CHECK(blocked_matches_single);

        std::vector<double> f1(n), f2(n);
        kernels::serial::distances_from(v, v.row(3), f1);
        kernels::omp::distances_from(v, v.row(3), f2);
        CHECK(f1 == f2);

        std::vector<double> s1(n), s2(n), s3(n), s4(n);
        kernels::serial::silhouette_samples(v, b.labels, k, s1);
        kernels::omp::silhouette_samples(v, b.labels, k, s2);
        kernels::serial::silhouette_samples_precomputed(p1, n, b.labels, k, s3);
        kernels::omp::silhouette_samples_precomputed(p1, n, b.labels, k, s4);
        CHECK(s1 == s2);
        CHECK(s3 == s4);
        CHECK(s1 == s3);
    }
}
