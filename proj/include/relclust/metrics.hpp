#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relclust/clustering.hpp"
#include "relclust/corpus.hpp"

namespace relclust {

// Gold class (rows) x predicted cluster (columns) co-occurrence counts.
class ContingencyTable {
public:
    // Labels are arbitrary ints; they are factorized internally.
    static ContingencyTable from_labels(std::span<const int> gold, std::span<const int> pred);

    std::size_t rows() const { return row_sums_.size(); }
    std::size_t cols() const { return col_sums_.size(); }
    std::int64_t at(std::size_t i, std::size_t j) const { return counts_[i * cols() + j]; }
    const std::vector<std::int64_t>& row_sums() const { return row_sums_; }
    const std::vector<std::int64_t>& col_sums() const { return col_sums_; }
    std::int64_t total() const { return total_; }

    bool operator==(const ContingencyTable&) const = default;

private:
    std::vector<std::int64_t> counts_;
    std::vector<std::int64_t> row_sums_;
    std::vector<std::int64_t> col_sums_;
    std::int64_t total_ = 0;
};

struct BCubed {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct VMeasure {
    double homogeneity = 0.0;
    double completeness = 0.0;
    double f1 = 0.0;
};

double harmonic_mean(double a, double b);

BCubed b_cubed(const ContingencyTable& table);
VMeasure v_measure(const ContingencyTable& table);
double ari(const ContingencyTable& table);

BCubed b_cubed(std::span<const int> gold, std::span<const int> pred);
VMeasure v_measure(std::span<const int> gold, std::span<const int> pred);
double ari(std::span<const int> gold, std::span<const int> pred);

struct EvaluationReport {
    double b3_precision = 0.0;
    double b3_recall = 0.0;
    double b3_f1 = 0.0;
    double v_homogeneity = 0.0;
    double v_completeness = 0.0;
    double v_f1 = 0.0;
    double ari = 0.0;
    std::size_t n = 0;
    std::size_t k_gold = 0;
    std::size_t k_pred = 0;
};

EvaluationReport evaluate(std::span<const int> gold, std::span<const int> pred);

// Joins the assignment's instance ids against the dataset and scores them.
EvaluationReport evaluate(const Dataset& gold_dataset, const ClusterAssignment& assignment);

// Gold label per assignment row, resolved by instance id. Throws
// Error(Validation) for unlabeled data or unresolvable ids.
std::vector<std::string> resolve_gold_labels(const Dataset& gold_dataset,
                                             const ClusterAssignment& assignment);

}  // namespace relclust
