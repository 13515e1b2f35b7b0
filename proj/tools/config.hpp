#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relclust/prompt.hpp"

namespace relclust::cli {

// Flat view of a TOML-like file: `[section]` headers and `key = value` lines
// become "section.key" entries. Values may be quoted strings, numbers or
// booleans; `#` starts a comment outside quotes.
using ConfigValues = std::map<std::string, std::string>;

ConfigValues parse_config(std::string_view text);
ConfigValues load_config(const std::filesystem::path& path);

enum class BackendKind { Inference, File, Stub };
enum class ClusterMode { KnownK, Elbow, Optics };

std::string_view to_string(BackendKind kind);
std::string_view to_string(ClusterMode mode);
BackendKind parse_backend_kind(std::string_view text);
ClusterMode parse_cluster_mode(std::string_view text);

struct BackendSpec {
    BackendKind kind = BackendKind::Stub;
    std::string model_path;
    std::size_t max_length = 512;
    std::size_t batch_size = 32;
    bool normalize = false;
    std::vector<std::string> command;  // inference server argv; empty means the bundled script
    std::string stub_mode = "oracle";  // oracle | hash
    std::size_t stub_dim = 768;
    double stub_noise = 0.3;
    std::string embeddings;            // file backend: cache to serve rows from
};

struct ClusterSpec {
    ClusterMode mode = ClusterMode::Elbow;
    std::optional<int> k;
    std::vector<int> grid;  // empty selects the default grid
    int min_samples = 5;
    std::uint64_t seed = 0;
};

struct RunConfig {
    std::string dataset_path;
    std::string format = "fewrel";  // fewrel | unlabeled
    TemplateId template_id = TemplateId::P;
    BackendSpec backend;
    ClusterSpec cluster;
    std::string out_dir = "relclust-out";
};

// Applies file values on top of the defaults. Unknown keys are rejected.
RunConfig config_from_values(const ConfigValues& values);

// "2:30" (inclusive range), "2:30:2" (with step) or "2,5,9".
std::vector<int> parse_grid(std::string_view text);

// Throws Error(Validation) when the configuration cannot run: known-k
// without k, missing paths, out-of-range numbers.
void validate_for_encode(const RunConfig& config);
void validate_for_cluster(const RunConfig& config);

// Stable fingerprints of the settings that determine each stage's output.
// The encode hash covers the dataset bytes, so editing the data invalidates
// the cache.
std::string encode_config_hash(const RunConfig& config, std::string_view dataset_bytes);
std::string cluster_config_hash(const RunConfig& config, std::string_view input_hash);

}  // namespace relclust::cli
