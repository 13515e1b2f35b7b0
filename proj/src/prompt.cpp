#include "relclust/prompt.hpp"

#include <json.hpp>

#include "relclust/error.hpp"

namespace relclust {

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::P: return "p";
        case TemplateId::PEmpty: return "p-empty";
        case TemplateId::P1: return "p1";
        case TemplateId::P2: return "p2";
        case TemplateId::P3: return "p3";
    }
    return "p";
}

TemplateId parse_template_id(std::string_view text) {
    for (TemplateId id : {TemplateId::P, TemplateId::PEmpty, TemplateId::P1, TemplateId::P2,
                          TemplateId::P3}) {
        if (text == to_string(id)) {
            return id;
        }
    }
    throw Error(ErrorKind::Argument, "unknown template '" + std::string(text) +
                                         "' (expected p, p-empty, p1, p2 or p3)");
}

PromptTemplate::PromptTemplate(TemplateId id, std::vector<Segment> segments)
    : id_(id), segments_(std::move(segments)) {
    std::size_t masks = 0;
    for (const Segment& s : segments_) {
        masks += s.kind == Segment::Kind::Mask ? 1 : 0;
    }
    if (masks != 1) {
        throw Error(ErrorKind::Argument, "a prompt template needs exactly one mask segment");
    }
    if (segments_.front().kind != Segment::Kind::Cls || segments_.back().kind != Segment::Kind::Sep) {
        throw Error(ErrorKind::Argument, "a prompt template must start with CLS and end with SEP");
    }
}

PromptTemplate PromptTemplate::builtin(TemplateId id) {
    using K = Segment::Kind;
    const Segment cls = Segment::of(K::Cls);
    const Segment sentence = Segment::of(K::Sentence);
    const Segment head = Segment::of(K::HeadMention);
    const Segment tail = Segment::of(K::TailMention);
    const Segment mask = Segment::of(K::Mask);
    const Segment sep = Segment::of(K::Sep);
    const Segment period = Segment::literal(".", true);

    // "<e1> is the [MASK] of <e2>."
    auto noun_body = [&](std::vector<Segment> prefix) {
        prefix.insert(prefix.end(), {head, Segment::literal("is the"), mask, Segment::literal("of"),
                                     tail, period, sep});
        return prefix;
    };

    switch (id) {
        case TemplateId::P:
            return PromptTemplate(id, {cls, sentence, head, mask, tail, period, sep});
        case TemplateId::PEmpty:
            return PromptTemplate(id, {cls, head, mask, tail, period, sep});
        case TemplateId::P1:
            return PromptTemplate(id, noun_body({cls, sentence}));
        case TemplateId::P2:
            return PromptTemplate(id, noun_body({cls, sentence, Segment::literal("In this sentence,")}));
        case TemplateId::P3:
            return PromptTemplate(id, noun_body({cls, sentence, Segment::literal("We deduce that")}));
    }
    throw Error(ErrorKind::Argument, "unknown template");
}

std::size_t count_mask_placeholders(std::string_view text) {
    std::size_t count = 0;
    for (std::size_t pos = text.find(kMaskPlaceholder); pos != std::string_view::npos;
         pos = text.find(kMaskPlaceholder, pos + kMaskPlaceholder.size())) {
        ++count;
    }
    return count;
}

RenderedPrompt render(const PromptTemplate& tmpl, const RelationInstance& inst) {
    RenderedPrompt out;
    out.source_instance_id = inst.instance_id;
    out.template_id = tmpl.id();

    auto append = [&out](std::string_view piece, bool glue) {
        if (!out.text.empty() && !glue) {
            out.text.push_back(' ');
        }
        out.text.append(piece);
    };

    for (const Segment& seg : tmpl.segments()) {
        switch (seg.kind) {
            case Segment::Kind::Cls: append(kClsPlaceholder, seg.glue); break;
            case Segment::Kind::Sep: append(kSepPlaceholder, seg.glue); break;
            case Segment::Kind::Mask:
                if (!out.text.empty() && !seg.glue) {
                    out.text.push_back(' ');
                }
                out.mask_offset = out.text.size();
                out.text.append(kMaskPlaceholder);
                break;
            case Segment::Kind::Sentence: {
                bool first = true;
                for (const std::string& tok : inst.tokens) {
                    append(tok, seg.glue && first);
                    first = false;
                }
                break;
            }
            case Segment::Kind::HeadMention: append(inst.head.mention_text, seg.glue); break;
            case Segment::Kind::TailMention: append(inst.tail.mention_text, seg.glue); break;
            case Segment::Kind::Literal: append(seg.text, seg.glue); break;
        }
    }

    if (count_mask_placeholders(out.text) != 1) {
        throw Error(ErrorKind::Validation,
                    "instance " + inst.instance_id + ": text already contains a mask placeholder");
    }
    return out;
}

std::vector<RenderedPrompt> render_all(const PromptTemplate& tmpl, const Dataset& dataset) {
    std::vector<RenderedPrompt> prompts;
    prompts.reserve(dataset.size());
    for (const auto& inst : dataset.instances) {
        prompts.push_back(render(tmpl, inst));
    }
    return prompts;
}

std::string prompts_to_jsonl(std::span<const RenderedPrompt> prompts) {
    std::string out;
    for (const RenderedPrompt& p : prompts) {
        nlohmann::json line = {{"instance_id", p.source_instance_id},
                               {"template_id", std::string(to_string(p.template_id))},
                               {"text", p.text}};
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

}  // namespace relclust
