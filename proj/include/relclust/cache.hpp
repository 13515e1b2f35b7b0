#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "relclust/matrix.hpp"

namespace relclust {

/// Embedding cache layout (all integers little-endian):
///
///   "PORE"                      4 bytes magic
///   header_length               u32
///   header                      UTF-8 JSON, sorted keys:
///                               {backend_name, config_hash?, dim, dtype:"f32",
///                                instance_ids, n, normalized, template_id, version}
///   payload                     n * dim f32, row-major
///   checksum                    u64 FNV-1a over the payload bytes
inline constexpr int kCacheVersion = 1;

struct CacheFile {
    EmbeddingMatrix matrix;
    std::string config_hash;  // empty when the writer did not record one
    std::uint64_t payload_checksum = 0;
};

std::string encode_cache(const EmbeddingMatrix& matrix, const std::string& config_hash = {});
CacheFile decode_cache(std::string_view bytes);

void save_cache(const EmbeddingMatrix& matrix, const std::filesystem::path& path,
                const std::string& config_hash = {});
EmbeddingMatrix load_cache(const std::filesystem::path& path);
CacheFile load_cache_file(const std::filesystem::path& path);

}  // namespace relclust
