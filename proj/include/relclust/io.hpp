#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace relclust {

// 64-bit FNV-1a. Used for cache payload checksums and stage config hashes.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string to_hex(std::uint64_t value);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary and renames over the target, so readers never
// observe a partially written stage file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace relclust
