#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "relclust/backend.hpp"
#include "relclust/matrix.hpp"
#include "relclust/prompt.hpp"

namespace relclust {

struct EncodeFailure {
    std::size_t prompt_index = 0;
    std::string instance_id;
    std::string reason;
};

struct EncodeResult {
    EmbeddingMatrix matrix;               // one row per successful prompt, input order
    std::vector<EncodeFailure> failures;  // over-length prompts, excluded from matrix
};

struct EncodeOptions {
    bool normalize = false;  // L2-normalize each row
};

// Row i of the result is the mask embedding of the i-th successfully
// tokenized prompt. Batching and threading never change the floats.
// Over-length prompts become failures; any other backend error is rethrown as
// Error(Backend) naming the prompt index.
EncodeResult encode(MlmBackend& backend, std::span<const RenderedPrompt> prompts,
                    const EncodeOptions& options = {});

std::vector<ScoredToken> top_tokens_for(MlmBackend& backend, const RenderedPrompt& prompt,
                                        std::size_t m);

}  // namespace relclust
