#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "relclust/backends.hpp"
#include "relclust/cache.hpp"
#include "relclust/io.hpp"

namespace relclust {

namespace {

const std::vector<std::string>& default_vocabulary() {
    static const std::vector<std::string> vocab = {
        ".",       ",",        "the",     "of",      "in",      "is",      "was",     "and",
        "married", "borders",  "born",    "located", "member",  "part",    "capital", "father",
        "mother",  "child",    "sibling", "spouse",  "author",  "director", "founded", "plays",
        "genre",   "country",  "city",    "river",   "team",    "album",   "company", "language"};
    return vocab;
}

constexpr std::int32_t kClsId = 101;
constexpr std::int32_t kSepId = 102;
constexpr std::int32_t kMaskId = 103;

std::uint64_t hash_ids(const std::vector<std::int32_t>& ids, std::uint64_t seed) {
    return fnv1a64(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(ids.data()),
                                                  ids.size() * sizeof(std::int32_t)),
                   0xcbf29ce484222325ULL ^ seed);
}

std::vector<float> unit_gaussian(std::uint64_t seed, std::size_t dim, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (double& x : v) {
        x = normal(rng);
        norm2 += x * x;
    }
    const double f = norm2 > 0.0 ? scale / std::sqrt(norm2) : 0.0;
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        out[i] = static_cast<float>(v[i] * f);
    }
    return out;
}

}  // namespace

StubBackend::StubBackend(StubOptions options) : options_(std::move(options)) {
    vocabulary_ = options_.vocabulary.empty() ? default_vocabulary() : options_.vocabulary;
    if (options_.mode == StubOptions::Mode::Oracle) {
        std::set<std::string> labels;
        for (const auto& [id, label] : options_.labels) {
            labels.insert(label);
        }
        for (const std::string& label : labels) {
            if (std::find(vocabulary_.begin(), vocabulary_.end(), label) == vocabulary_.end()) {
                vocabulary_.push_back(label);
            }
        }
    }
    if (options_.dim == 0) {
        throw Error(ErrorKind::Argument, "stub backend needs a positive dimension");
    }
}

std::string StubBackend::name() const {
    return options_.mode == StubOptions::Mode::Oracle ? "stub-oracle" : "stub-hash";
}

TokenizedPrompt StubBackend::tokenize(const RenderedPrompt& prompt) {
    TokenizedPrompt out;
    out.instance_id = prompt.source_instance_id;
    std::size_t pos = 0;
    const std::string& text = prompt.text;
    bool found_mask = false;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find(' ', pos), text.size());
        const std::string_view word(text.data() + pos, end - pos);
        if (!word.empty()) {
            if (word == kClsPlaceholder) {
                out.ids.push_back(kClsId);
            } else if (word == kSepPlaceholder) {
                out.ids.push_back(kSepId);
            } else if (word == kMaskPlaceholder) {
                out.mask_position = out.ids.size();
                out.ids.push_back(kMaskId);
                found_mask = true;
            } else {
                out.ids.push_back(1000 + static_cast<std::int32_t>(fnv1a64(word) % 29000));
            }
        }
        pos = end + 1;
    }
    if (!found_mask) {
        throw Error(ErrorKind::Argument,
                    "instance " + prompt.source_instance_id + ": prompt has no mask placeholder");
    }
    if (out.ids.size() > options_.max_length) {
        throw PromptTooLong(prompt.source_instance_id, out.ids.size(), options_.max_length);
    }
    return out;
}

std::vector<float> StubBackend::mask_embedding(const TokenizedPrompt& prompt) {
    if (options_.mode == StubOptions::Mode::Hash) {
        return unit_gaussian(hash_ids(prompt.ids, options_.seed), options_.dim, 1.0);
    }
    auto it = options_.labels.find(prompt.instance_id);
    if (it == options_.labels.end()) {
        throw Error(ErrorKind::Backend, "stub oracle has no label for instance " + prompt.instance_id);
    }
    std::vector<float> v = unit_gaussian(fnv1a64(it->second) ^ options_.seed, options_.dim, 1.0);
    const std::vector<float> noise =
        unit_gaussian(fnv1a64(prompt.instance_id) ^ (options_.seed + 1), options_.dim, options_.noise);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] += noise[i];
    }
    return v;
}

std::vector<double> StubBackend::logits(const TokenizedPrompt& prompt) const {
    std::mt19937_64 rng(hash_ids(prompt.ids, options_.seed) ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> scores(vocabulary_.size());
    for (double& s : scores) {
        s = uniform(rng);
    }
    if (options_.mode == StubOptions::Mode::Oracle) {
        auto it = options_.labels.find(prompt.instance_id);
        if (it != options_.labels.end()) {
            auto pos = std::find(vocabulary_.begin(), vocabulary_.end(), it->second);
            scores[static_cast<std::size_t>(pos - vocabulary_.begin())] = 2.0;
        }
    }
    return scores;
}

std::vector<ScoredToken> StubBackend::top_tokens(const TokenizedPrompt& prompt, std::size_t m) {
    if (m == 0) {
        throw Error(ErrorKind::Argument, "m must be at least 1");
    }
    if (m > vocabulary_.size()) {
        throw Error(ErrorKind::Argument, "m exceeds vocabulary (" +
                                             std::to_string(vocabulary_.size()) + " entries)");
    }
    const std::vector<double> scores = logits(prompt);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<ScoredToken> out;
    for (std::size_t i = 0; i < m; ++i) {
        out.push_back({vocabulary_[order[i]], scores[order[i]]});
    }
    return out;
}

// ---------------------------------------------------------------------------

FileBackend::FileBackend(EmbeddingMatrix matrix) : matrix_(std::move(matrix)) {
    for (std::size_t i = 0; i < matrix_.rows(); ++i) {
        index_.emplace(matrix_.instance_ids()[i], i);
    }
}

std::unique_ptr<FileBackend> FileBackend::open(const std::filesystem::path& cache_path) {
    return std::make_unique<FileBackend>(load_cache(cache_path));
}

TokenizedPrompt FileBackend::tokenize(const RenderedPrompt& prompt) {
    TokenizedPrompt out;
    out.instance_id = prompt.source_instance_id;
    return out;
}

std::vector<float> FileBackend::mask_embedding(const TokenizedPrompt& prompt) {
    auto it = index_.find(prompt.instance_id);
    if (it == index_.end()) {
        throw Error(ErrorKind::Backend, "no precomputed embedding for instance " + prompt.instance_id);
    }
    auto row = matrix_.row(it->second);
    return {row.begin(), row.end()};
}

}  // namespace relclust
