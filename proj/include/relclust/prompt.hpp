#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relclust/corpus.hpp"

namespace relclust {

inline constexpr std::string_view kClsPlaceholder = "[CLS]";
inline constexpr std::string_view kMaskPlaceholder = "[MASK]";
inline constexpr std::string_view kSepPlaceholder = "[SEP]";

enum class TemplateId { P, PEmpty, P1, P2, P3 };

// CLI spellings: p, p-empty, p1, p2, p3.
std::string_view to_string(TemplateId id);
TemplateId parse_template_id(std::string_view text);

struct Segment {
    enum class Kind { Cls, Sentence, HeadMention, TailMention, Mask, Sep, Literal };

    Kind kind = Kind::Literal;
    std::string text;   // only for Literal
    bool glue = false;  // join to the previous segment without a space

    static Segment literal(std::string text, bool glue = false) {
        return Segment{Kind::Literal, std::move(text), glue};
    }
    static Segment of(Kind kind) { return Segment{kind, {}, false}; }
};

class PromptTemplate {
public:
    // Throws Error(Argument) unless there is exactly one mask segment, the
    // first segment is CLS and the last is SEP.
    PromptTemplate(TemplateId id, std::vector<Segment> segments);

    static PromptTemplate builtin(TemplateId id);

    TemplateId id() const { return id_; }
    std::span<const Segment> segments() const { return segments_; }

private:
    TemplateId id_;
    std::vector<Segment> segments_;
};

struct RenderedPrompt {
    std::string text;
    std::size_t mask_offset = 0;  // byte offset of the mask placeholder in text
    std::string source_instance_id;
    TemplateId template_id = TemplateId::P;

    bool operator==(const RenderedPrompt&) const = default;
};

std::size_t count_mask_placeholders(std::string_view text);

RenderedPrompt render(const PromptTemplate& tmpl, const RelationInstance& inst);
std::vector<RenderedPrompt> render_all(const PromptTemplate& tmpl, const Dataset& dataset);

// One JSON object per line: instance_id, template_id, text.
std::string prompts_to_jsonl(std::span<const RenderedPrompt> prompts);

}  // namespace relclust
