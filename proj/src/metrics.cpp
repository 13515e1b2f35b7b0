#include "relclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "relclust/error.hpp"

namespace relclust {

namespace {

void check_pair(std::span<const int> gold, std::span<const int> pred) {
    if (gold.size() != pred.size()) {
        throw Error(ErrorKind::Argument, "label lists differ in length (" + std::to_string(gold.size()) +
                                             " gold, " + std::to_string(pred.size()) + " predicted)");
    }
    if (gold.empty()) {
        throw Error(ErrorKind::Argument, "label lists are empty");
    }
}

std::vector<std::size_t> factorize(std::span<const int> labels, std::size_t& count) {
    std::map<int, std::size_t> ids;
    for (int l : labels) {
        ids.emplace(l, 0);
    }
    std::size_t next = 0;
    for (auto& [label, id] : ids) {
        id = next++;
    }
    count = next;
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (int l : labels) {
        out.push_back(ids[l]);
    }
    return out;
}

double choose2(std::int64_t v) {
    return 0.5 * static_cast<double>(v) * static_cast<double>(v - 1);
}

// Shannon entropy in nats of a distribution given by counts summing to n.
double entropy(const std::vector<std::int64_t>& counts, std::int64_t n) {
    double h = 0.0;
    const double total = static_cast<double>(n);
    for (std::int64_t c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / total;
            h -= p * std::log(p);
        }
    }
    return h;
}

}  // namespace

ContingencyTable ContingencyTable::from_labels(std::span<const int> gold, std::span<const int> pred) {
    check_pair(gold, pred);
    std::size_t rows = 0;
    std::size_t cols = 0;
    const auto g = factorize(gold, rows);
    const auto p = factorize(pred, cols);

    ContingencyTable t;
    t.counts_.assign(rows * cols, 0);
    t.row_sums_.assign(rows, 0);
    t.col_sums_.assign(cols, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        ++t.counts_[g[i] * cols + p[i]];
        ++t.row_sums_[g[i]];
        ++t.col_sums_[p[i]];
    }
    t.total_ = static_cast<std::int64_t>(g.size());
    return t;
}

double harmonic_mean(double a, double b) {
    return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
}

BCubed b_cubed(const ContingencyTable& t) {
    // Every member of cell (i, j) has precision n_ij / b_j and recall n_ij / a_i.
    double precision = 0.0;
    double recall = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) {
            const auto nij = static_cast<double>(t.at(i, j));
            if (nij == 0.0) {
                continue;
            }
            precision += nij * nij / static_cast<double>(t.col_sums()[j]);
            recall += nij * nij / static_cast<double>(t.row_sums()[i]);
        }
    }
    const auto n = static_cast<double>(t.total());
    BCubed out;
    out.precision = precision / n;
    out.recall = recall / n;
    out.f1 = harmonic_mean(out.precision, out.recall);
    return out;
}

VMeasure v_measure(const ContingencyTable& t) {
    const std::int64_t n = t.total();
    const double h_gold = entropy(t.row_sums(), n);
    const double h_pred = entropy(t.col_sums(), n);

    // H(gold | pred) and H(pred | gold) from the joint counts.
    double h_gold_given_pred = 0.0;
    double h_pred_given_gold = 0.0;
    const auto total = static_cast<double>(n);
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) {
            const auto nij = static_cast<double>(t.at(i, j));
            if (nij == 0.0) {
                continue;
            }
            h_gold_given_pred -= nij / total * std::log(nij / static_cast<double>(t.col_sums()[j]));
            h_pred_given_gold -= nij / total * std::log(nij / static_cast<double>(t.row_sums()[i]));
        }
    }

    VMeasure out;
    out.homogeneity = h_gold == 0.0 ? 1.0 : std::clamp(1.0 - h_gold_given_pred / h_gold, 0.0, 1.0);
    out.completeness = h_pred == 0.0 ? 1.0 : std::clamp(1.0 - h_pred_given_gold / h_pred, 0.0, 1.0);
    out.f1 = harmonic_mean(out.homogeneity, out.completeness);
    return out;
}

double ari(const ContingencyTable& t) {
    double index = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) {
            index += choose2(t.at(i, j));
        }
    }
    double sum_rows = 0.0;
    for (std::int64_t a : t.row_sums()) {
        sum_rows += choose2(a);
    }
    double sum_cols = 0.0;
    for (std::int64_t b : t.col_sums()) {
        sum_cols += choose2(b);
    }
    const double pairs = choose2(t.total());
    if (pairs == 0.0) {
        return 1.0;  // fewer than two instances: no pair can disagree
    }
    const double expected = sum_rows * sum_cols / pairs;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    const double denom = max_index - expected;
    if (denom == 0.0) {
        return 1.0;
    }
    return (index - expected) / denom;
}

BCubed b_cubed(std::span<const int> gold, std::span<const int> pred) {
    return b_cubed(ContingencyTable::from_labels(gold, pred));
}

VMeasure v_measure(std::span<const int> gold, std::span<const int> pred) {
    return v_measure(ContingencyTable::from_labels(gold, pred));
}

double ari(std::span<const int> gold, std::span<const int> pred) {
    return ari(ContingencyTable::from_labels(gold, pred));
}

EvaluationReport evaluate(std::span<const int> gold, std::span<const int> pred) {
    const ContingencyTable t = ContingencyTable::from_labels(gold, pred);
    const BCubed b3 = b_cubed(t);
    const VMeasure v = v_measure(t);
    EvaluationReport r;
    r.b3_precision = b3.precision;
    r.b3_recall = b3.recall;
    r.b3_f1 = b3.f1;
    r.v_homogeneity = v.homogeneity;
    r.v_completeness = v.completeness;
    r.v_f1 = v.f1;
    r.ari = ari(t);
    r.n = static_cast<std::size_t>(t.total());
    r.k_gold = t.rows();
    r.k_pred = t.cols();
    return r;
}

std::vector<std::string> resolve_gold_labels(const Dataset& gold_dataset,
                                             const ClusterAssignment& assignment) {
    if (!gold_dataset.labeled()) {
        throw Error(ErrorKind::Validation, "evaluation requires gold labels");
    }
    if (assignment.instance_ids.size() != assignment.labels.size()) {
        throw Error(ErrorKind::Validation, "assignment does not carry one instance id per label");
    }
    std::unordered_map<std::string, const RelationInstance*> by_id;
    for (const auto& inst : gold_dataset.instances) {
        by_id.emplace(inst.instance_id, &inst);
    }
    std::vector<std::string> labels;
    std::vector<std::string> missing;
    for (const std::string& id : assignment.instance_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end() || !it->second->gold_relation) {
            missing.push_back(id);
            continue;
        }
        labels.push_back(*it->second->gold_relation);
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
            list += (i ? ", " : "") + missing[i];
        }
        if (missing.size() > 20) {
            list += ", ... (" + std::to_string(missing.size()) + " total)";
        }
        throw Error(ErrorKind::Validation, "assignment ids without a gold label: " + list);
    }
    return labels;
}

EvaluationReport evaluate(const Dataset& gold_dataset, const ClusterAssignment& assignment) {
    const std::vector<std::string> names = resolve_gold_labels(gold_dataset, assignment);
    std::map<std::string, int> ids;
    std::vector<int> gold;
    gold.reserve(names.size());
    for (const std::string& name : names) {
        gold.push_back(ids.emplace(name, static_cast<int>(ids.size())).first->second);
    }
    return evaluate(gold, assignment.labels);
}

}  // namespace relclust
