#include "relclust/cache.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "relclust/error.hpp"
#include "relclust/io.hpp"

namespace relclust {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'P', 'O', 'R', 'E'};

static_assert(sizeof(float) == 4);

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
    }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    }
    return static_cast<T>(v);
}

std::span<const unsigned char> as_bytes(std::string_view s) {
    return {reinterpret_cast<const unsigned char*>(s.data()), s.size()};
}

}  // namespace

std::string encode_cache(const EmbeddingMatrix& matrix, const std::string& config_hash) {
    json header = {{"version", kCacheVersion},
                   {"n", matrix.rows()},
                   {"dim", matrix.dim()},
                   {"dtype", "f32"},
                   {"backend_name", matrix.backend_name()},
                   {"template_id", matrix.template_id()},
                   {"normalized", matrix.normalized()},
                   {"instance_ids", matrix.instance_ids()}};
    if (!config_hash.empty()) {
        header["config_hash"] = config_hash;
    }
    const std::string header_text = header.dump();

    std::string payload;
    payload.reserve(matrix.data().size() * 4);
    for (float f : matrix.data()) {
        put_le(payload, std::bit_cast<std::uint32_t>(f));
    }

    std::string out(kMagic, sizeof(kMagic));
    put_le(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;
    out += payload;
    put_le(out, fnv1a64(payload));
    return out;
}

CacheFile decode_cache(std::string_view bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw Error(ErrorKind::Format, "not an embedding cache (bad magic)");
    }
    if (bytes.size() < 8) {
        throw Error(ErrorKind::Corruption, "embedding cache truncated before its header length");
    }
    const std::size_t header_len = get_le<std::uint32_t>(bytes, 4);
    if (bytes.size() < 8 + header_len) {
        throw Error(ErrorKind::Corruption, "embedding cache truncated inside its header");
    }
    json header;
    try {
        header = json::parse(bytes.substr(8, header_len));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Format, std::string("embedding cache header is not JSON: ") + e.what());
    }

    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<std::string> ids;
    CacheFile file;
    std::string backend_name;
    std::string template_id;
    bool normalized = false;
    try {
        if (header.at("version").get<int>() != kCacheVersion) {
            throw Error(ErrorKind::Format, "unsupported cache version " + header.at("version").dump());
        }
        if (header.at("dtype").get<std::string>() != "f32") {
            throw Error(ErrorKind::Format, "unsupported cache dtype " + header.at("dtype").dump());
        }
        n = header.at("n").get<std::size_t>();
        dim = header.at("dim").get<std::size_t>();
        ids = header.at("instance_ids").get<std::vector<std::string>>();
        backend_name = header.at("backend_name").get<std::string>();
        template_id = header.at("template_id").get<std::string>();
        normalized = header.value("normalized", false);
        file.config_hash = header.value("config_hash", std::string());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Format, std::string("embedding cache header: ") + e.what());
    }
    if (ids.size() != n) {
        throw Error(ErrorKind::Format, "cache header lists " + std::to_string(ids.size()) +
                                           " ids for n = " + std::to_string(n));
    }

    const std::size_t payload_len = n * dim * 4;
    const std::size_t expected = 8 + header_len + payload_len + 8;
    if (bytes.size() < expected) {
        throw Error(ErrorKind::Corruption, "embedding cache truncated: " + std::to_string(bytes.size()) +
                                               " bytes, expected " + std::to_string(expected));
    }
    if (bytes.size() > expected) {
        throw Error(ErrorKind::Format, "embedding cache has trailing bytes");
    }
    const std::string_view payload = bytes.substr(8 + header_len, payload_len);
    const std::uint64_t stored = get_le<std::uint64_t>(bytes, 8 + header_len + payload_len);
    file.payload_checksum = fnv1a64(as_bytes(payload));
    if (stored != file.payload_checksum) {
        throw Error(ErrorKind::Corruption, "embedding cache checksum mismatch");
    }

    std::vector<float> data(n * dim);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<float>(get_le<std::uint32_t>(payload, 4 * i));
    }
    try {
        file.matrix = EmbeddingMatrix(n, dim, std::move(data), std::move(ids), template_id,
                                      backend_name, normalized);
    } catch (const Error& e) {
        throw Error(ErrorKind::Corruption, std::string("embedding cache payload: ") + e.what());
    }
    return file;
}

void save_cache(const EmbeddingMatrix& matrix, const std::filesystem::path& path,
                const std::string& config_hash) {
    write_file_atomic(path, encode_cache(matrix, config_hash));
}

CacheFile load_cache_file(const std::filesystem::path& path) {
    return decode_cache(read_file(path));
}

EmbeddingMatrix load_cache(const std::filesystem::path& path) {
    return load_cache_file(path).matrix;
}

}  // namespace relclust
