#include "relclust/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "relclust/encoder.hpp"
#include "relclust/error.hpp"
#include "relclust/metrics.hpp"

namespace relclust {

namespace {

// Shortest-augmenting-path Hungarian method with potentials, minimizing cost
// over an n x m matrix with n <= m. Returns the column of each row.
std::vector<int> hungarian_min(const std::vector<std::int64_t>& cost, std::size_t n, std::size_t m) {
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> u(n + 1, 0), v(m + 1, 0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    auto c = [&](std::size_t i, std::size_t j) { return cost[(i - 1) * m + (j - 1)]; };

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<std::int64_t> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            std::int64_t delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const std::int64_t cur = c(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(n, -1);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            row_to_col[p[j] - 1] = static_cast<int>(j - 1);
        }
    }
    return row_to_col;
}

}  // namespace

std::vector<int> max_weight_matching(std::span<const std::int64_t> weights, std::size_t rows,
                                     std::size_t cols) {
    if (weights.size() != rows * cols) {
        throw Error(ErrorKind::Argument, "weight matrix size does not match its shape");
    }
    if (rows == 0 || cols == 0) {
        return std::vector<int>(rows, -1);
    }
    const bool transpose = rows > cols;
    const std::size_t n = transpose ? cols : rows;
    const std::size_t m = transpose ? rows : cols;
    std::vector<std::int64_t> cost(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            cost[i * m + j] = -(transpose ? weights[j * cols + i] : weights[i * cols + j]);
        }
    }
    const std::vector<int> assigned = hungarian_min(cost, n, m);
    if (!transpose) {
        return assigned;
    }
    std::vector<int> row_to_col(rows, -1);
    for (std::size_t i = 0; i < n; ++i) {
        row_to_col[static_cast<std::size_t>(assigned[i])] = static_cast<int>(i);
    }
    return row_to_col;
}

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::diagonal_mass() const {
    std::int64_t mass = 0;
    for (std::size_t i = 0; i < std::min(rows(), cols()); ++i) {
        mass += at(i, i);
    }
    return mass;
}

ConfusionMatrix confusion(const Dataset& gold_dataset, const ClusterAssignment& assignment) {
    const std::vector<std::string> gold = resolve_gold_labels(gold_dataset, assignment);

    ConfusionMatrix m;
    m.gold_labels = gold_dataset.relation_inventory;
    std::map<int, std::size_t> row_of;
    for (int l : assignment.labels) {
        row_of.emplace(l, 0);
    }
    for (auto& [id, row] : row_of) {
        row = m.cluster_ids.size();
        m.cluster_ids.push_back(id);
    }
    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t j = 0; j < m.gold_labels.size(); ++j) {
        col_of.emplace(m.gold_labels[j], j);
    }
    m.counts.assign(m.rows() * m.cols(), 0);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ++m.counts[row_of[assignment.labels[i]] * m.cols() + col_of.at(gold[i])];
    }
    m.matched.assign(m.rows(), std::nullopt);
    return m;
}

ConfusionMatrix diagonalize(const ConfusionMatrix& matrix) {
    const std::size_t rows = matrix.rows();
    const std::size_t cols = matrix.cols();
    const std::vector<int> match = max_weight_matching(matrix.counts, rows, cols);

    std::vector<std::int64_t> row_sum(rows, 0), col_sum(cols, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            row_sum[r] += matrix.at(r, c);
            col_sum[c] += matrix.at(r, c);
        }
    }

    std::vector<std::size_t> matched_rows;
    for (std::size_t r = 0; r < rows; ++r) {
        if (match[r] >= 0) {
            matched_rows.push_back(r);
        }
    }
    std::stable_sort(matched_rows.begin(), matched_rows.end(), [&](std::size_t a, std::size_t b) {
        return matrix.at(a, static_cast<std::size_t>(match[a])) > matrix.at(b, static_cast<std::size_t>(match[b]));
    });

    std::vector<std::size_t> row_order = matched_rows;
    std::vector<std::size_t> col_order;
    std::vector<char> col_taken(cols, 0);
    for (std::size_t r : matched_rows) {
        col_order.push_back(static_cast<std::size_t>(match[r]));
        col_taken[static_cast<std::size_t>(match[r])] = 1;
    }
    std::vector<std::size_t> rest_rows, rest_cols;
    for (std::size_t r = 0; r < rows; ++r) {
        if (match[r] < 0) {
            rest_rows.push_back(r);
        }
    }
    for (std::size_t c = 0; c < cols; ++c) {
        if (!col_taken[c]) {
            rest_cols.push_back(c);
        }
    }
    std::stable_sort(rest_rows.begin(), rest_rows.end(),
                     [&](std::size_t a, std::size_t b) { return row_sum[a] > row_sum[b]; });
    std::stable_sort(rest_cols.begin(), rest_cols.end(),
                     [&](std::size_t a, std::size_t b) { return col_sum[a] > col_sum[b]; });
    row_order.insert(row_order.end(), rest_rows.begin(), rest_rows.end());
    col_order.insert(col_order.end(), rest_cols.begin(), rest_cols.end());

    ConfusionMatrix out;
    out.counts.resize(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        out.cluster_ids.push_back(matrix.cluster_ids[row_order[r]]);
        const int c = match[row_order[r]];
        if (c >= 0 && matrix.at(row_order[r], static_cast<std::size_t>(c)) > 0) {
            out.matched.emplace_back(matrix.gold_labels[static_cast<std::size_t>(c)]);
        } else {
            out.matched.emplace_back(std::nullopt);
        }
        for (std::size_t cc = 0; cc < cols; ++cc) {
            out.counts[r * cols + cc] = matrix.at(row_order[r], col_order[cc]);
        }
    }
    for (std::size_t c : col_order) {
        out.gold_labels.push_back(matrix.gold_labels[c]);
    }
    return out;
}

namespace {

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char ch : text) {
        if (ch == '"') {
            out += "\"\"";
        } else {
            out.push_back(ch);
        }
    }
    return out + "\"";
}

}  // namespace

std::string confusion_to_csv(const ConfusionMatrix& matrix) {
    std::ostringstream os;
    os << "cluster,matched";
    for (const std::string& label : matrix.gold_labels) {
        os << ',' << csv_field(label);
    }
    os << '\n';
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        os << "c-" << matrix.cluster_ids[r] << ','
           << (r < matrix.matched.size() && matrix.matched[r] ? csv_field(*matrix.matched[r]) : "");
        for (std::size_t c = 0; c < matrix.cols(); ++c) {
            os << ',' << matrix.at(r, c);
        }
        os << '\n';
    }
    return os.str();
}

std::string confusion_to_pgm(const ConfusionMatrix& matrix) {
    const std::int64_t peak =
        matrix.counts.empty() ? 0 : *std::max_element(matrix.counts.begin(), matrix.counts.end());
    std::ostringstream os;
    os << "P2\n# rows: clusters, columns: gold relations\n"
       << matrix.cols() << ' ' << matrix.rows() << "\n255\n";
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        for (std::size_t c = 0; c < matrix.cols(); ++c) {
            const std::int64_t v = matrix.at(r, c);
            const std::int64_t shade = peak > 0 ? 255 - (255 * v + peak / 2) / peak : 255;
            os << (c ? " " : "") << shade;
        }
        os << '\n';
    }
    return os.str();
}

ClusterReport cluster_composition(const Dataset& gold_dataset, const ClusterAssignment& assignment,
                                  int cluster_id) {
    const std::vector<std::string> gold = resolve_gold_labels(gold_dataset, assignment);
    std::map<std::string, std::int64_t> counts;
    ClusterReport report;
    report.cluster_id = cluster_id;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (assignment.labels[i] == cluster_id) {
            ++counts[gold[i]];
            ++report.size;
        }
    }
    if (report.size == 0) {
        throw Error(ErrorKind::Argument, "unknown cluster id " + std::to_string(cluster_id));
    }
    for (const auto& [label, count] : counts) {
        LabelShare share;
        share.label = label;
        share.count = count;
        share.fraction = static_cast<double>(count) / static_cast<double>(report.size);
        share.percent = static_cast<int>(std::lround(100.0 * share.fraction));
        report.composition.push_back(share);
    }
    std::stable_sort(report.composition.begin(), report.composition.end(),
                     [](const LabelShare& a, const LabelShare& b) { return a.count > b.count; });
    return report;
}

std::string normalize_token(std::string_view token) {
    if (token.starts_with("##")) {
        token.remove_prefix(2);
    } else if (token.starts_with("\xc4\xa0")) {  // U+0120, byte-level BPE word start
        token.remove_prefix(2);
    } else if (token.starts_with("\xe2\x96\x81")) {  // U+2581, sentencepiece word start
        token.remove_prefix(3);
    }
    std::string out(token);
    for (char& ch : out) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    return out;
}

std::vector<ClusterReport> name_clusters(MlmBackend& backend, std::span<const RenderedPrompt> prompts,
                                         const ClusterAssignment& assignment, std::size_t m) {
    if (m == 0) {
        throw Error(ErrorKind::Argument, "m must be at least 1");
    }
    if (prompts.size() != assignment.labels.size()) {
        throw Error(ErrorKind::Argument, "prompts and assignment differ in length");
    }
    std::map<int, std::map<std::string, std::int64_t>> freq;
    std::map<int, std::size_t> sizes;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        if (!assignment.instance_ids.empty() &&
            assignment.instance_ids[i] != prompts[i].source_instance_id) {
            throw Error(ErrorKind::Argument, "prompt " + std::to_string(i) + " is not aligned with the assignment");
        }
        const std::vector<ScoredToken> top = top_tokens_for(backend, prompts[i], 1);
        ++freq[assignment.labels[i]][normalize_token(top.front().token)];
        ++sizes[assignment.labels[i]];
    }

    std::vector<ClusterReport> reports;
    for (const auto& [cluster, tokens] : freq) {
        std::vector<TokenCount> ranked;
        for (const auto& [token, count] : tokens) {
            ranked.push_back({token, count});
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const TokenCount& a, const TokenCount& b) { return a.count > b.count; });
        if (ranked.size() > m) {
            ranked.resize(m);
        }
        ClusterReport report;
        report.cluster_id = cluster;
        report.size = sizes[cluster];
        report.top_tokens = std::move(ranked);
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace relclust
