#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relclust/error.hpp"
#include "relclust/prompt.hpp"

namespace relclust {

struct TokenizedPrompt {
    std::vector<std::int32_t> ids;
    std::size_t mask_position = 0;
    std::string instance_id;
};

struct ScoredToken {
    std::string token;
    double score = 0.0;

    bool operator==(const ScoredToken&) const = default;
};

// Raised by tokenize() when a prompt exceeds the backend's maximum length.
// Prompts are never truncated: truncation could delete an entity mention.
class PromptTooLong : public Error {
public:
    PromptTooLong(const std::string& instance_id, std::size_t length, std::size_t limit);
};

// Contract for a frozen masked language model. The placeholders [CLS], [MASK]
// and [SEP] in rendered prompts are mapped to backend special tokens here.
class MlmBackend {
public:
    virtual ~MlmBackend() = default;

    virtual std::string name() const = 0;
    virtual std::size_t hidden_dim() const = 0;
    // True when tokenize/mask_embedding/top_tokens may be called concurrently.
    virtual bool concurrent_safe() const { return false; }
    virtual bool has_mlm_head() const { return false; }

    virtual TokenizedPrompt tokenize(const RenderedPrompt& prompt) = 0;
    virtual std::vector<float> mask_embedding(const TokenizedPrompt& prompt) = 0;

    // Batched form; `out` holds batch.size() * hidden_dim() floats. The
    // default loops over mask_embedding.
    virtual void mask_embeddings(std::span<const TokenizedPrompt> batch, std::span<float> out);

    // m highest-scoring vocabulary entries at the mask, scores non-increasing.
    virtual std::vector<ScoredToken> top_tokens(const TokenizedPrompt& prompt, std::size_t m);
};

}  // namespace relclust
