#include "relclust/backend.hpp"

#include <algorithm>

namespace relclust {

PromptTooLong::PromptTooLong(const std::string& instance_id, std::size_t length, std::size_t limit)
    : Error(ErrorKind::Validation, "instance " + instance_id + ": prompt has " +
                                       std::to_string(length) + " tokens, backend maximum is " +
                                       std::to_string(limit)) {}

void MlmBackend::mask_embeddings(std::span<const TokenizedPrompt> batch, std::span<float> out) {
    const std::size_t d = hidden_dim();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        std::vector<float> v = mask_embedding(batch[i]);
        if (v.size() != d) {
            throw Error(ErrorKind::Backend, "backend returned " + std::to_string(v.size()) +
                                                " values, declared hidden_dim is " + std::to_string(d));
        }
        std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
}

std::vector<ScoredToken> MlmBackend::top_tokens(const TokenizedPrompt&, std::size_t) {
    throw Error(ErrorKind::Backend, "backend '" + name() + "' has no MLM head");
}

}  // namespace relclust
