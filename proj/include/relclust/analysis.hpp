#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relclust/backend.hpp"
#include "relclust/clustering.hpp"
#include "relclust/corpus.hpp"
#include "relclust/prompt.hpp"

namespace relclust {

// Maximum-weight one-to-one matching on a rows x cols weight matrix
// (row-major). Returns, for each row, its matched column or -1. Exactly
// min(rows, cols) rows are matched.
std::vector<int> max_weight_matching(std::span<const std::int64_t> weights, std::size_t rows,
                                     std::size_t cols);

// Predicted clusters (rows) x gold relations (columns).
struct ConfusionMatrix {
    std::vector<std::int64_t> counts;  // row-major
    std::vector<int> cluster_ids;      // row labels
    std::vector<std::string> gold_labels;  // column labels
    // Matched gold label per row; set by diagonalize, none for unmatched
    // rows and for matches that carry no mass.
    std::vector<std::optional<std::string>> matched;

    std::size_t rows() const { return cluster_ids.size(); }
    std::size_t cols() const { return gold_labels.size(); }
    std::int64_t at(std::size_t r, std::size_t c) const { return counts[r * cols() + c]; }
    std::int64_t total() const;
    std::int64_t diagonal_mass() const;
};

// Raw counts; rows by ascending cluster id, columns by the dataset's
// relation inventory.
ConfusionMatrix confusion(const Dataset& gold_dataset, const ClusterAssignment& assignment);

// Reorders both axes so the optimal cluster/relation matching sits on the
// leading diagonal (heaviest first); unmatched rows and columns follow in
// descending marginal order.
ConfusionMatrix diagonalize(const ConfusionMatrix& matrix);

std::string confusion_to_csv(const ConfusionMatrix& matrix);
// Plain-text grayscale PGM (P2); darker cells hold more instances.
std::string confusion_to_pgm(const ConfusionMatrix& matrix);

struct LabelShare {
    std::string label;
    std::int64_t count = 0;
    double fraction = 0.0;
    int percent = 0;  // rounded
};

struct TokenCount {
    std::string token;
    std::int64_t count = 0;
};

struct ClusterReport {
    int cluster_id = 0;
    std::size_t size = 0;
    std::vector<LabelShare> composition;  // descending share
    std::optional<std::vector<TokenCount>> top_tokens;
};

ClusterReport cluster_composition(const Dataset& gold_dataset, const ClusterAssignment& assignment,
                                  int cluster_id);

// Lower-cases and strips wordpiece/BPE markers ("##", "Ġ"); punctuation
// is kept.
std::string normalize_token(std::string_view token);

// Top-1 prediction per instance, aggregated to the m most frequent tokens of
// each cluster. prompts[i] must belong to assignment row i.
std::vector<ClusterReport> name_clusters(MlmBackend& backend, std::span<const RenderedPrompt> prompts,
                                         const ClusterAssignment& assignment, std::size_t m);

}  // namespace relclust
