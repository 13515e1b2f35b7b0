#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "relclust/backend.hpp"
#include "relclust/matrix.hpp"

namespace relclust {

/// Deterministic test backend.
///
/// In hash mode the mask embedding is a pseudo-random unit vector seeded by
/// the prompt's token ids, so identical prompts give identical rows. In
/// oracle mode each instance is looked up in a label map and embedded as the
/// label's fixed unit direction plus small gaussian noise; the noise is
/// seeded by the instance id. Oracle mode exists to test clustering and
/// evaluation end to end and is the only component that ever sees labels.
struct StubOptions {
    enum class Mode { Hash, Oracle };

    Mode mode = Mode::Hash;
    std::size_t dim = 768;
    std::size_t max_length = 512;
    double noise = 0.3;  // expected norm of the noise vector in oracle mode
    std::uint64_t seed = 0;
    std::unordered_map<std::string, std::string> labels;  // instance_id -> label
    std::vector<std::string> vocabulary;  // empty selects a small built-in list
};

class StubBackend final : public MlmBackend {
public:
    explicit StubBackend(StubOptions options);

    std::string name() const override;
    std::size_t hidden_dim() const override { return options_.dim; }
    bool concurrent_safe() const override { return true; }
    bool has_mlm_head() const override { return true; }

    TokenizedPrompt tokenize(const RenderedPrompt& prompt) override;
    std::vector<float> mask_embedding(const TokenizedPrompt& prompt) override;
    std::vector<ScoredToken> top_tokens(const TokenizedPrompt& prompt, std::size_t m) override;

    const std::vector<std::string>& vocabulary() const { return vocabulary_; }

private:
    std::vector<double> logits(const TokenizedPrompt& prompt) const;

    StubOptions options_;
    std::vector<std::string> vocabulary_;
};

// Serves precomputed embeddings keyed by instance id.
class FileBackend final : public MlmBackend {
public:
    explicit FileBackend(EmbeddingMatrix matrix);
    static std::unique_ptr<FileBackend> open(const std::filesystem::path& cache_path);

    std::string name() const override { return matrix_.backend_name(); }
    std::size_t hidden_dim() const override { return matrix_.dim(); }
    bool concurrent_safe() const override { return true; }

    TokenizedPrompt tokenize(const RenderedPrompt& prompt) override;
    std::vector<float> mask_embedding(const TokenizedPrompt& prompt) override;

private:
    EmbeddingMatrix matrix_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Talks to an external inference process over a JSON-lines protocol on its
/// stdin/stdout (see tools/mlm_server.py). One request per line:
///
///   {"op":"info"}                                  -> {"name","hidden_dim","mlm_head"}
///   {"op":"tokenize","text":...}                   -> {"ids":[...],"mask":i} | {"error":"too_long","length":n}
///   {"op":"embed","batch":[{"ids":[...],"mask":i}]} -> {"vectors":[[...],...]}
///   {"op":"top","ids":[...],"mask":i,"m":m}        -> {"tokens":[[tok,score],...]}
///
/// Any reply may instead be {"error": message}.
struct SubprocessOptions {
    std::vector<std::string> command;  // argv of the server, e.g. {"python3", "tools/mlm_server.py"}
    std::string model_path;
    std::size_t max_length = 512;
    std::size_t batch_size = 32;
};

class SubprocessBackend final : public MlmBackend {
public:
    explicit SubprocessBackend(SubprocessOptions options);
    ~SubprocessBackend() override;

    SubprocessBackend(const SubprocessBackend&) = delete;
    SubprocessBackend& operator=(const SubprocessBackend&) = delete;

    std::string name() const override { return name_; }
    std::size_t hidden_dim() const override { return hidden_dim_; }
    bool has_mlm_head() const override { return mlm_head_; }

    TokenizedPrompt tokenize(const RenderedPrompt& prompt) override;
    std::vector<float> mask_embedding(const TokenizedPrompt& prompt) override;
    void mask_embeddings(std::span<const TokenizedPrompt> batch, std::span<float> out) override;
    std::vector<ScoredToken> top_tokens(const TokenizedPrompt& prompt, std::size_t m) override;

private:
    class Process;

    std::string request(const std::string& line);

    SubprocessOptions options_;
    std::unique_ptr<Process> process_;
    std::string name_;
    std::size_t hidden_dim_ = 0;
    bool mlm_head_ = false;
};

}  // namespace relclust
