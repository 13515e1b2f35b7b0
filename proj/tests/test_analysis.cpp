#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "relclust/analysis.hpp"
#include "relclust/backends.hpp"
#include "relclust/error.hpp"
#include "synth.hpp"

using namespace relclust;

namespace {

ConfusionMatrix make_matrix(std::size_t rows, std::size_t cols, std::vector<std::int64_t> counts) {
    ConfusionMatrix m;
    m.counts = std::move(counts);
    for (std::size_t r = 0; r < rows; ++r) m.cluster_ids.push_back(static_cast<int>(r));
    for (std::size_t c = 0; c < cols; ++c) m.gold_labels.push_back("g" + std::to_string(c));
    m.matched.assign(rows, std::nullopt);
    return m;
}

std::int64_t matching_weight(const std::vector<std::int64_t>& w, std::size_t cols, const std::vector<int>& match) {
    std::int64_t s = 0;
    for (std::size_t r = 0; r < match.size(); ++r)
        if (match[r] >= 0) s += w[r * cols + static_cast<std::size_t>(match[r])];
    return s;
}

std::vector<std::int64_t> sorted(std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<std::int64_t> row_sums(const ConfusionMatrix& m) {
    std::vector<std::int64_t> out(m.rows(), 0);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[r] += m.at(r, c);
    return out;
}

std::vector<std::int64_t> col_sums(const ConfusionMatrix& m) {
    std::vector<std::int64_t> out(m.cols(), 0);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m.at(r, c);
    return out;
}

}  // namespace

TEST_CASE("matching against brute force") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 1 + rng() % 6, cols = 1 + rng() % 6;
        std::vector<std::int64_t> w(rows * cols);
        for (auto& x : w) x = static_cast<std::int64_t>(rng() % 20);
        const std::vector<int> match = max_weight_matching(w, rows, cols);
        REQUIRE(match.size() == rows);
        std::vector<int> used;
        for (int c : match)
            if (c >= 0) used.push_back(c);
        CHECK(used.size() == std::min(rows, cols));
        std::sort(used.begin(), used.end());
        CHECK(std::adjacent_find(used.begin(), used.end()) == used.end());
        CHECK(matching_weight(w, cols, match) == oracle::best_matching_weight(w, rows, cols));
    }
}

TEST_CASE("diagonalize the 2 x 3 example") {
    const ConfusionMatrix m = make_matrix(2, 3, {5, 0, 0, 0, 4, 3});
    const std::vector<int> match = max_weight_matching(m.counts, 2, 3);
    CHECK(match == std::vector<int>{0, 1});
    const ConfusionMatrix d = diagonalize(m);
    CHECK(d.gold_labels == std::vector<std::string>{"g0", "g1", "g2"});
    CHECK(d.cluster_ids == std::vector<int>{0, 1});
    CHECK(d.diagonal_mass() == 9);
    CHECK(d.matched[0] == "g0");
    CHECK(d.matched[1] == "g1");
}

TEST_CASE("diagonalize restores a shuffled identity") {
    const ConfusionMatrix m = make_matrix(3, 3, {0, 0, 7, 6, 0, 0, 0, 5, 0});
    const ConfusionMatrix d = diagonalize(m);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK((d.at(r, c) != 0) == (r == c));
    CHECK(d.diagonal_mass() == 18);
    CHECK(d.at(0, 0) == 7);
}

TEST_CASE("diagonalize preserves entries and marginals") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 1 + rng() % 7, cols = 1 + rng() % 7;
        std::vector<std::int64_t> w(rows * cols);
        for (auto& x : w) x = static_cast<std::int64_t>(rng() % 9);
        const ConfusionMatrix m = make_matrix(rows, cols, w);
        const ConfusionMatrix d = diagonalize(m);
        CHECK(sorted(d.counts) == sorted(m.counts));
        CHECK(sorted(row_sums(d)) == sorted(row_sums(m)));
        CHECK(sorted(col_sums(d)) == sorted(col_sums(m)));
        CHECK(d.total() == m.total());
        std::int64_t trace = 0;
        for (std::size_t i = 0; i < std::min(rows, cols); ++i) trace += m.at(i, i);
        CHECK(d.diagonal_mass() >= trace);
        CHECK(d.diagonal_mass() == oracle::best_matching_weight(w, rows, cols));
    }
}

TEST_CASE("confusion from an assignment") {
    const Dataset ds = synth::make_corpus(3, 4, 0);
    ClusterAssignment a;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        a.instance_ids.push_back(ds.instances[i].instance_id);
        // Relations P100 and P101 merge into cluster 5, P102 goes to cluster 2.
        a.labels.push_back(*ds.instances[i].gold_relation == "P102" ? 2 : 5);
    }
    a.k = 2;
    const ConfusionMatrix m = confusion(ds, a);
    CHECK(m.cluster_ids == std::vector<int>{2, 5});
    CHECK(m.gold_labels == ds.relation_inventory);
    CHECK(m.counts == std::vector<std::int64_t>{0, 0, 4, 4, 4, 0});

    const std::string csv = confusion_to_csv(diagonalize(m));
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header.rfind("cluster,matched,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    const std::string pgm = confusion_to_pgm(m);
    CHECK(pgm.rfind("P2", 0) == 0);
    CHECK(pgm.find("255") != std::string::npos);
}

TEST_CASE("cluster composition") {
    const Dataset full = synth::make_corpus(5, 25, 1);
    const std::map<std::string, int> keep = {{"P100", 25}, {"P101", 21}, {"P102", 19}, {"P103", 18}, {"P104", 17}};
    Dataset ds = full;
    ds.instances.clear();
    std::map<std::string, int> seen;
    for (const auto& inst : full.instances)
        if (seen[*inst.gold_relation]++ < keep.at(*inst.gold_relation)) ds.instances.push_back(inst);
    REQUIRE(ds.size() == 100);

    ClusterAssignment a;
    a.k = 1;
    for (const auto& inst : ds.instances) {
        a.instance_ids.push_back(inst.instance_id);
        a.labels.push_back(0);
    }
    const ClusterReport r = cluster_composition(ds, a, 0);
    CHECK(r.size == 100);
    REQUIRE(r.composition.size() == 5);
    const std::vector<int> expect = {25, 21, 19, 18, 17};
    double fractions = 0.0;
    int percents = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(r.composition[i].percent == expect[i]);
        CHECK(r.composition[i].count == keep.at(r.composition[i].label));
        fractions += r.composition[i].fraction;
        percents += r.composition[i].percent;
    }
    CHECK(std::abs(fractions - 1.0) < 1e-12);
    CHECK(std::abs(percents - 100) <= 1);
    CHECK_THROWS_AS(cluster_composition(ds, a, 3), Error);

    const Dataset pure = synth::make_corpus(1, 6, 2);
    ClusterAssignment b;
    b.k = 1;
    for (const auto& inst : pure.instances) {
        b.instance_ids.push_back(inst.instance_id);
        b.labels.push_back(0);
    }
    const ClusterReport p = cluster_composition(pure, b, 0);
    REQUIRE(p.composition.size() == 1);
    CHECK(p.composition[0].percent == 100);
}

TEST_CASE("composition percentages match an independent count") {
    const Dataset ds = synth::make_corpus(6, 13, 4);
    std::mt19937_64 rng(8);
    ClusterAssignment a;
    a.k = 4;
    for (const auto& inst : ds.instances) {
        a.instance_ids.push_back(inst.instance_id);
        a.labels.push_back(static_cast<int>(rng() % 4));
    }
    for (int c = 0; c < 4; ++c) {
        std::map<std::string, std::int64_t> counts;
        std::int64_t size = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (a.labels[i] != c) continue;
            ++counts[*ds.instances[i].gold_relation];
            ++size;
        }
        const ClusterReport r = cluster_composition(ds, a, c);
        CHECK(r.size == static_cast<std::size_t>(size));
        for (const LabelShare& s : r.composition) {
            CHECK(s.count == counts[s.label]);
            CHECK(s.percent == static_cast<int>(std::lround(100.0 * static_cast<double>(s.count) / static_cast<double>(size))));
        }
    }
}

TEST_CASE("token normalization") {
    CHECK(normalize_token("##Ing") == "ing");
    CHECK(normalize_token("\xC4\xA0" "Married") == "married");
    CHECK(normalize_token("\xE2\x96\x81" "Borders") == "borders");
    CHECK(normalize_token(".") == ".");
}

TEST_CASE("cluster naming with a stub head") {
    const Dataset ds = synth::make_corpus(2, 5, 6);
    StubOptions opt;
    opt.mode = StubOptions::Mode::Oracle;
    opt.dim = 8;
    ClusterAssignment a;
    a.k = 2;
    for (const auto& inst : ds.instances) {
        const bool first = *inst.gold_relation == "P100";
        opt.labels[inst.instance_id] = first ? "married" : "borders";
        a.instance_ids.push_back(inst.instance_id);
        a.labels.push_back(first ? 1 : 0);
    }
    StubBackend stub(opt);
    const auto prompts = render_all(PromptTemplate::builtin(TemplateId::P), ds);
    const auto reports = name_clusters(stub, prompts, a, 3);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].cluster_id == 0);
    REQUIRE(reports[0].top_tokens.has_value());
    REQUIRE(reports[0].top_tokens->size() == 1);
    CHECK((*reports[0].top_tokens)[0].token == "borders");
    CHECK((*reports[0].top_tokens)[0].count == 5);
    CHECK((*reports[1].top_tokens)[0].token == "married");
    CHECK((*reports[1].top_tokens)[0].count == 5);

    std::vector<RenderedPrompt> misaligned(prompts.rbegin(), prompts.rend());
    CHECK_THROWS_AS(name_clusters(stub, misaligned, a, 3), Error);
}
