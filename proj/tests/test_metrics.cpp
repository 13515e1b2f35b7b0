#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "relclust/metrics.hpp"

using namespace relclust;

TEST_CASE("b-cubed hand example") {
    const std::vector<int> gold = {0, 0, 1, 1}, pred = {0, 1, 1, 1};
    const BCubed b = b_cubed(gold, pred);
    CHECK(b.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(b.recall == doctest::Approx(3.0 / 4.0).epsilon(1e-15));
    CHECK(b.f1 == doctest::Approx(harmonic_mean(2.0 / 3.0, 0.75)));
}

TEST_CASE("v-measure hand example") {
    const std::vector<int> gold = {0, 0, 1, 1}, pred = {0, 0, 1, 2};
    const VMeasure v = v_measure(gold, pred);
    const double completeness = 1.0 - (0.5 * std::log(2.0)) / (1.5 * std::log(2.0));
    CHECK(v.homogeneity == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(v.completeness - completeness) < 1e-12);
    CHECK(std::abs(v.f1 - 2.0 * completeness / (1.0 + completeness)) < 1e-12);
}

TEST_CASE("ari hand example") {
    const std::vector<int> gold = {0, 0, 1, 1}, pred = {0, 0, 1, 2};
    CHECK(std::abs(ari(gold, pred) - 4.0 / 7.0) < 1e-12);
}

TEST_CASE("identity scores one") {
    const std::vector<int> gold = {3, 1, 1, 2, 3, 3, 0};
    const EvaluationReport r = evaluate(gold, gold);
    CHECK(r.b3_precision == 1.0);
    CHECK(r.b3_recall == 1.0);
    CHECK(r.b3_f1 == 1.0);
    CHECK(r.v_homogeneity == 1.0);
    CHECK(r.v_completeness == 1.0);
    CHECK(r.v_f1 == 1.0);
    CHECK(r.ari == 1.0);
    CHECK(r.k_gold == 4);
    CHECK(r.k_pred == 4);
}

TEST_CASE("constant predictor") {
    std::vector<int> gold;
    for (int c = 0; c < 5; ++c) gold.insert(gold.end(), 7, c);
    const std::vector<int> pred(gold.size(), 0);
    const EvaluationReport r = evaluate(gold, pred);
    CHECK(r.b3_precision == doctest::Approx(0.2));
    CHECK(r.b3_recall == 1.0);
    CHECK(r.v_homogeneity == 0.0);
    CHECK(r.v_completeness == 1.0);
    CHECK(r.v_f1 == 0.0);
    CHECK(r.ari == 0.0);
}

TEST_CASE("invariance under renaming and table dependence") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> gold(30), pred(30);
        for (auto& g : gold) g = static_cast<int>(rng() % 4);
        for (auto& p : pred) p = static_cast<int>(rng() % 5);
        std::vector<int> gmap = {10, 40, 20, 30}, pmap = {4, 0, 3, 1, 2};
        std::vector<int> g2, p2;
        for (int g : gold) g2.push_back(gmap[g]);
        for (int p : pred) p2.push_back(pmap[p]);
        CHECK(std::abs(ari(gold, pred) - ari(g2, p2)) < 1e-12);
        CHECK(std::abs(b_cubed(gold, pred).f1 - b_cubed(g2, p2).f1) < 1e-12);
        CHECK(std::abs(v_measure(gold, pred).f1 - v_measure(g2, p2).f1) < 1e-12);

        // Shuffling instances keeps the table, so every score is unchanged.
        std::vector<std::size_t> idx(30);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<int> g3, p3;
        for (std::size_t i : idx) {
            g3.push_back(gold[i]);
            p3.push_back(pred[i]);
        }
        const EvaluationReport a = evaluate(gold, pred), b = evaluate(g3, p3);
        CHECK(a.b3_f1 == b.b3_f1);
        CHECK(a.v_f1 == b.v_f1);
        CHECK(a.ari == b.ari);

        const BCubed bc = b_cubed(gold, pred);
        const VMeasure vm = v_measure(gold, pred);
        CHECK(bc.precision >= 0.0);
        CHECK(bc.recall <= 1.0);
        CHECK(vm.homogeneity >= 0.0);
        CHECK(vm.completeness <= 1.0);
        CHECK(ari(gold, pred) <= 1.0);
    }
}

TEST_CASE("agreement with brute-force oracles") {
    for (std::size_t n = 1; n <= 5; ++n) {
        const auto parts = oracle::all_partitions(n);
        for (const auto& g : parts) {
            for (const auto& p : parts) {
                const auto ob = oracle::b_cubed(g, p);
                const auto ov = oracle::v_measure(g, p);
                const BCubed b = b_cubed(g, p);
                const VMeasure v = v_measure(g, p);
                CHECK(std::abs(b.f1 - ob.f1) < 1e-12);
                CHECK(std::abs(v.f1 - ov.f1) < 1e-12);
                CHECK(std::abs(ari(g, p) - oracle::ari(g, p)) < 1e-12);
            }
        }
    }
}

TEST_CASE("ari is zero on average under random permutation") {
    std::vector<int> gold;
    for (int c = 0; c < 4; ++c) gold.insert(gold.end(), 50, c);
    std::mt19937_64 rng(123);
    double sum = 0.0;
    for (int r = 0; r < 1000; ++r) {
        std::vector<int> pred = gold;
        std::shuffle(pred.begin(), pred.end(), rng);
        sum += ari(gold, pred);
    }
    CHECK(std::abs(sum / 1000.0) < 0.02);
}

TEST_CASE("contingency table") {
    const std::vector<int> gold = {5, 5, 9, 9, 9}, pred = {1, 2, 2, 2, 1};
    const ContingencyTable t = ContingencyTable::from_labels(gold, pred);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 2);
    CHECK(t.total() == 5);
    CHECK(t.row_sums() == std::vector<std::int64_t>{2, 3});
    std::int64_t s = 0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) s += t.at(i, j);
    CHECK(s == 5);
    CHECK_THROWS(ContingencyTable::from_labels(gold, std::vector<int>{1, 2}));
}
