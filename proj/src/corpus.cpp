#include "relclust/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "relclust/error.hpp"
#include "relclust/io.hpp"

namespace relclust {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::Validation, "instance " + where + ": " + what);
}

json parse_json(std::string_view text, const std::string& name) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, name + ": malformed JSON at byte " + std::to_string(e.byte) +
                                          ": " + e.what());
    }
}

std::string squash_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        if (!std::isspace(c)) {
            out.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    return out;
}

EntitySpan parse_entity(const json& value, std::size_t token_count, const std::string& where,
                        const char* field) {
    const std::string tag = std::string("field '") + field + "'";
    if (!value.is_array() || value.size() != 3) {
        invalid(where, tag + " must be [mention, kb_id, spans]");
    }
    EntitySpan entity;
    if (!value[0].is_string() || value[0].get<std::string>().empty()) {
        invalid(where, tag + " has an empty or non-string mention");
    }
    entity.mention_text = value[0].get<std::string>();
    if (value[1].is_string()) {
        entity.kb_id = value[1].get<std::string>();
    } else if (!value[1].is_null()) {
        invalid(where, tag + " kb id must be a string or null");
    }
    const json& spans = value[2];
    if (!spans.is_array() || spans.empty()) {
        invalid(where, tag + " needs at least one token span");
    }
    for (const json& indices : spans) {
        if (!indices.is_array() || indices.empty()) {
            invalid(where, tag + " has an empty token index list");
        }
        long lo = 0;
        long hi = 0;
        bool first = true;
        for (const json& idx : indices) {
            if (!idx.is_number_integer()) {
                invalid(where, tag + " token index is not an integer");
            }
            const long v = idx.get<long>();
            lo = first ? v : std::min(lo, v);
            hi = first ? v : std::max(hi, v);
            first = false;
        }
        if (lo < 0 || hi >= static_cast<long>(token_count)) {
            invalid(where, tag + " span [" + std::to_string(lo) + ", " + std::to_string(hi) +
                               "] out of range for " + std::to_string(token_count) + " tokens");
        }
        entity.token_spans.push_back({static_cast<int>(lo), static_cast<int>(hi)});
    }
    return entity;
}

void check_mention(const RelationInstance& inst, const EntitySpan& entity, const char* role,
                   std::vector<std::string>* warnings) {
    if (warnings == nullptr) {
        return;
    }
    const TokenSpan& span = entity.canonical();
    std::string joined;
    for (int i = span.start; i <= span.end; ++i) {
        joined += inst.tokens[static_cast<std::size_t>(i)];
    }
    if (squash_lower(joined) != squash_lower(entity.mention_text)) {
        warnings->push_back("instance " + inst.instance_id + ": " + role + " mention '" +
                            entity.mention_text + "' differs from its tokens '" + joined + "'");
    }
}

RelationInstance parse_instance(const json& value, std::string id,
                                std::optional<std::string> label,
                                std::vector<std::string>* warnings) {
    if (!value.is_object()) {
        invalid(id, "not a JSON object");
    }
    auto tokens_it = value.find("tokens");
    if (tokens_it == value.end() || !tokens_it->is_array()) {
        invalid(id, "missing 'tokens' array");
    }
    RelationInstance inst;
    inst.instance_id = std::move(id);
    for (const json& tok : *tokens_it) {
        if (!tok.is_string()) {
            invalid(inst.instance_id, "non-string token");
        }
        inst.tokens.push_back(tok.get<std::string>());
    }
    if (inst.tokens.empty()) {
        invalid(inst.instance_id, "empty token list");
    }
    auto h = value.find("h");
    auto t = value.find("t");
    if (h == value.end() || t == value.end()) {
        invalid(inst.instance_id, "missing 'h' or 't'");
    }
    inst.head = parse_entity(*h, inst.tokens.size(), inst.instance_id, "h");
    inst.tail = parse_entity(*t, inst.tokens.size(), inst.instance_id, "t");
    inst.gold_relation = std::move(label);
    check_mention(inst, inst.head, "head", warnings);
    check_mention(inst, inst.tail, "tail", warnings);
    return inst;
}

std::vector<std::string> inventory_of(const std::vector<RelationInstance>& instances) {
    std::set<std::string> labels;
    for (const auto& inst : instances) {
        if (inst.gold_relation) {
            labels.insert(*inst.gold_relation);
        }
    }
    return {labels.begin(), labels.end()};
}

json entity_to_json(const EntitySpan& entity) {
    json spans = json::array();
    for (const TokenSpan& span : entity.token_spans) {
        json indices = json::array();
        for (int i = span.start; i <= span.end; ++i) {
            indices.push_back(i);
        }
        spans.push_back(std::move(indices));
    }
    return json::array({entity.mention_text, entity.kb_id ? json(*entity.kb_id) : json(nullptr),
                        std::move(spans)});
}

json instance_to_json(const RelationInstance& inst) {
    json obj = json::object();
    obj["tokens"] = inst.tokens;
    obj["h"] = entity_to_json(inst.head);
    obj["t"] = entity_to_json(inst.tail);
    return obj;
}

}  // namespace

Dataset parse_fewrel(std::string_view json_text, std::string name,
                     std::vector<std::string>* warnings) {
    const json root = parse_json(json_text, name);
    if (!root.is_object()) {
        throw Error(ErrorKind::Validation,
                    name + ": expected an object mapping relation labels to instance arrays");
    }
    Dataset dataset;
    dataset.name = std::move(name);
    for (const auto& [label, items] : root.items()) {
        if (!items.is_array()) {
            throw Error(ErrorKind::Validation,
                        dataset.name + ": relation '" + label + "' does not map to an array");
        }
        for (std::size_t i = 0; i < items.size(); ++i) {
            dataset.instances.push_back(
                parse_instance(items[i], label + "#" + std::to_string(i), label, warnings));
        }
    }
    dataset.relation_inventory = inventory_of(dataset.instances);
    validate(dataset);
    return dataset;
}

Dataset load_fewrel(const std::filesystem::path& path, std::vector<std::string>* warnings) {
    return parse_fewrel(read_file(path), path.filename().string(), warnings);
}

Dataset parse_unlabeled(std::string_view json_text, std::string name,
                        std::vector<std::string>* warnings) {
    const json root = parse_json(json_text, name);
    if (!root.is_array()) {
        throw Error(ErrorKind::Validation, name + ": expected an array of instances");
    }
    Dataset dataset;
    dataset.name = std::move(name);
    for (std::size_t i = 0; i < root.size(); ++i) {
        std::string id = std::to_string(i);
        if (root[i].is_object()) {
            auto it = root[i].find("id");
            if (it != root[i].end() && it->is_string()) {
                id = it->get<std::string>();
            }
        }
        try {
            dataset.instances.push_back(parse_instance(root[i], id, std::nullopt, warnings));
        } catch (const Error& e) {
            throw Error(e.kind(), "index " + std::to_string(i) + ": " + e.what());
        }
    }
    validate(dataset);
    return dataset;
}

Dataset load_unlabeled(const std::filesystem::path& path, std::vector<std::string>* warnings) {
    return parse_unlabeled(read_file(path), path.filename().string(), warnings);
}

Dataset strip_labels(const Dataset& dataset) {
    Dataset out = dataset;
    for (auto& inst : out.instances) {
        inst.gold_relation.reset();
    }
    out.relation_inventory.clear();
    return out;
}

void validate(const Dataset& dataset) {
    std::unordered_set<std::string> seen;
    for (const auto& inst : dataset.instances) {
        if (!seen.insert(inst.instance_id).second) {
            invalid(inst.instance_id, "duplicate instance id");
        }
        if (inst.tokens.empty()) {
            invalid(inst.instance_id, "empty token list");
        }
        for (const EntitySpan* entity : {&inst.head, &inst.tail}) {
            if (entity->mention_text.empty()) {
                invalid(inst.instance_id, "empty mention");
            }
            if (entity->token_spans.empty()) {
                invalid(inst.instance_id, "entity without spans");
            }
            for (const TokenSpan& span : entity->token_spans) {
                if (span.start < 0 || span.start > span.end ||
                    span.end >= static_cast<int>(inst.tokens.size())) {
                    invalid(inst.instance_id, "invalid span");
                }
            }
        }
    }
    if (dataset.relation_inventory != inventory_of(dataset.instances)) {
        throw Error(ErrorKind::Validation,
                    dataset.name + ": relation inventory does not match instance labels");
    }
}

std::string export_fewrel(const Dataset& dataset) {
    json root = json::object();
    for (const auto& inst : dataset.instances) {
        if (!inst.gold_relation) {
            throw Error(ErrorKind::Argument,
                        "instance " + inst.instance_id + " has no label; use the unlabeled layout");
        }
        json& bucket = root[*inst.gold_relation];
        if (bucket.is_null()) {
            bucket = json::array();
        }
        bucket.push_back(instance_to_json(inst));
    }
    return root.dump() + "\n";
}

std::string export_unlabeled(const Dataset& dataset) {
    json root = json::array();
    for (const auto& inst : dataset.instances) {
        json obj = instance_to_json(inst);
        obj["id"] = inst.instance_id;
        root.push_back(std::move(obj));
    }
    return root.dump() + "\n";
}

}  // namespace relclust
