#include "relclust/encoder.hpp"

#include <cmath>
#include <exception>
#include <optional>

#include "relclust/error.hpp"

namespace relclust {

namespace {

std::string describe(const std::exception_ptr& error) {
    try {
        std::rethrow_exception(error);
    } catch (const std::exception& e) {
        return e.what();
    } catch (...) {
        return "unknown error";
    }
}

[[noreturn]] void rethrow_at(std::size_t index, const RenderedPrompt& prompt,
                             const std::exception_ptr& error) {
    throw Error(ErrorKind::Backend, "prompt " + std::to_string(index) + " (" +
                                        prompt.source_instance_id + "): " + describe(error));
}

}  // namespace

EncodeResult encode(MlmBackend& backend, std::span<const RenderedPrompt> prompts,
                    const EncodeOptions& options) {
    const std::size_t n = prompts.size();
    const std::size_t d = backend.hidden_dim();

    for (std::size_t i = 0; i < n; ++i) {
        if (count_mask_placeholders(prompts[i].text) != 1) {
            throw Error(ErrorKind::Argument,
                        "prompt " + std::to_string(i) + " must contain exactly one mask placeholder");
        }
        if (prompts[i].template_id != prompts.front().template_id) {
            throw Error(ErrorKind::Argument, "prompts mix several templates");
        }
    }

    const bool parallel = backend.concurrent_safe();
    std::vector<TokenizedPrompt> tokenized(n);
    std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic, 16) if (parallel)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            tokenized[i] = backend.tokenize(prompts[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }

    EncodeResult result;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i]) {
            kept.push_back(i);
            continue;
        }
        try {
            std::rethrow_exception(errors[i]);
        } catch (const PromptTooLong& e) {
            result.failures.push_back({i, prompts[i].source_instance_id, e.what()});
        } catch (...) {
            rethrow_at(i, prompts[i], errors[i]);
        }
    }

    std::vector<float> data(kept.size() * d);
    std::vector<TokenizedPrompt> batch;
    batch.reserve(kept.size());
    for (std::size_t i : kept) {
        batch.push_back(std::move(tokenized[i]));
    }

    if (parallel) {
        std::vector<std::exception_ptr> embed_errors(kept.size());
#pragma omp parallel for schedule(dynamic, 8)
        for (std::size_t r = 0; r < kept.size(); ++r) {
            try {
                backend.mask_embeddings(std::span<const TokenizedPrompt>(&batch[r], 1),
                                        std::span<float>(data).subspan(r * d, d));
            } catch (...) {
                embed_errors[r] = std::current_exception();
            }
        }
        for (std::size_t r = 0; r < kept.size(); ++r) {
            if (embed_errors[r]) {
                rethrow_at(kept[r], prompts[kept[r]], embed_errors[r]);
            }
        }
    } else {
        try {
            backend.mask_embeddings(batch, data);
        } catch (...) {
            // The batched call cannot tell which prompt failed; retry one by
            // one to name it.
            for (std::size_t r = 0; r < kept.size(); ++r) {
                try {
                    backend.mask_embeddings(std::span<const TokenizedPrompt>(&batch[r], 1),
                                            std::span<float>(data).subspan(r * d, d));
                } catch (...) {
                    rethrow_at(kept[r], prompts[kept[r]], std::current_exception());
                }
            }
            throw;
        }
    }

    for (std::size_t r = 0; r < kept.size(); ++r) {
        float* row = data.data() + r * d;
        double norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::isfinite(row[j])) {
                throw Error(ErrorKind::Backend, "prompt " + std::to_string(kept[r]) +
                                                    " produced a non-finite embedding");
            }
            norm2 += static_cast<double>(row[j]) * row[j];
        }
        if (options.normalize && norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (std::size_t j = 0; j < d; ++j) {
                row[j] = static_cast<float>(row[j] * inv);
            }
        }
    }

    std::vector<std::string> ids;
    ids.reserve(kept.size());
    for (std::size_t i : kept) {
        ids.push_back(prompts[i].source_instance_id);
    }
    const std::string template_id =
        prompts.empty() ? std::string(to_string(TemplateId::P)) : std::string(to_string(prompts.front().template_id));
    result.matrix = EmbeddingMatrix(kept.size(), d, std::move(data), std::move(ids), template_id,
                                    backend.name(), options.normalize);
    return result;
}

std::vector<ScoredToken> top_tokens_for(MlmBackend& backend, const RenderedPrompt& prompt,
                                        std::size_t m) {
    if (m == 0) {
        throw Error(ErrorKind::Argument, "m must be at least 1");
    }
    const TokenizedPrompt tokens = backend.tokenize(prompt);
    std::vector<ScoredToken> out = backend.top_tokens(tokens, m);
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].score > out[i - 1].score) {
            throw Error(ErrorKind::Backend, "backend returned top tokens out of order");
        }
    }
    return out;
}

}  // namespace relclust
