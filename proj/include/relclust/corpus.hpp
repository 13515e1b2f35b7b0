#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relclust {

// Inclusive, 0-based token range.
struct TokenSpan {
    int start = 0;
    int end = 0;

    bool operator==(const TokenSpan&) const = default;
};

struct EntitySpan {
    std::string mention_text;
    std::optional<std::string> kb_id;
    // All spans are retained; the first one is canonical for prompt building.
    std::vector<TokenSpan> token_spans;

    const TokenSpan& canonical() const { return token_spans.front(); }

    bool operator==(const EntitySpan&) const = default;
};

struct RelationInstance {
    std::vector<std::string> tokens;
    EntitySpan head;
    EntitySpan tail;
    std::optional<std::string> gold_relation;
    std::string instance_id;

    bool operator==(const RelationInstance&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<RelationInstance> instances;
    // Sorted, deduplicated gold labels; empty when the data is unlabeled.
    std::vector<std::string> relation_inventory;

    bool labeled() const { return !relation_inventory.empty(); }
    std::size_t size() const { return instances.size(); }

    bool operator==(const Dataset&) const = default;
};

// Non-fatal findings (mention/token drift) are appended to `warnings` when it
// is non-null. Structural problems throw relclust::Error.
Dataset parse_fewrel(std::string_view json_text, std::string name,
                     std::vector<std::string>* warnings = nullptr);
Dataset load_fewrel(const std::filesystem::path& path,
                    std::vector<std::string>* warnings = nullptr);

Dataset parse_unlabeled(std::string_view json_text, std::string name,
                        std::vector<std::string>* warnings = nullptr);
Dataset load_unlabeled(const std::filesystem::path& path,
                       std::vector<std::string>* warnings = nullptr);

Dataset strip_labels(const Dataset& dataset);

// Checks every structural invariant; throws Error(Validation) naming the
// offending instance.
void validate(const Dataset& dataset);

// Deterministic exports: object keys sorted, arrays in input order. The
// labeled layout requires every instance to carry a gold label.
std::string export_fewrel(const Dataset& dataset);
std::string export_unlabeled(const Dataset& dataset);

}  // namespace relclust
