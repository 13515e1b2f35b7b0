#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include <json.hpp>

#include "relclust/error.hpp"
#include "relclust/io.hpp"

namespace relclust::cli {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

Error config_error(std::size_t line, const std::string& what) {
    return Error(ErrorKind::Parse, "config line " + std::to_string(line) + ": " + what);
}

// Strips a trailing comment and unquotes; returns nullopt on a bad string.
std::optional<std::string> parse_value(std::string_view raw) {
    raw = trim(raw);
    if (!raw.empty() && raw.front() == '"') {
        std::string out;
        std::size_t i = 1;
        for (; i < raw.size() && raw[i] != '"'; ++i) {
            if (raw[i] == '\\' && i + 1 < raw.size()) {
                ++i;
                switch (raw[i]) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    default: out.push_back(raw[i]);
                }
            } else {
                out.push_back(raw[i]);
            }
        }
        if (i >= raw.size()) {
            return std::nullopt;
        }
        const std::string_view rest = trim(raw.substr(i + 1));
        if (!rest.empty() && rest.front() != '#') {
            return std::nullopt;
        }
        return out;
    }
    const std::size_t hash = raw.find('#');
    return std::string(trim(raw.substr(0, hash)));
}

template <typename T>
T to_number(const std::string& key, const std::string& text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::Validation, "config key " + key + ": '" + text + "' is not a valid number");
    }
    return value;
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true") {
        return true;
    }
    if (text == "false") {
        return false;
    }
    throw Error(ErrorKind::Validation, "config key " + key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> split_words(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> words;
    for (std::string w; in >> w;) {
        words.push_back(w);
    }
    return words;
}

}  // namespace

ConfigValues parse_config(std::string_view text) {
    ConfigValues values;
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;

        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (line.front() == '[') {
            const std::size_t close = line.find(']');
            if (close == std::string_view::npos) {
                throw config_error(line_no, "unterminated section header");
            }
            section = std::string(trim(line.substr(1, close - 1)));
            if (section.empty()) {
                throw config_error(line_no, "empty section name");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw config_error(line_no, "expected key = value");
        }
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) {
            throw config_error(line_no, "empty key");
        }
        const auto value = parse_value(line.substr(eq + 1));
        if (!value) {
            throw config_error(line_no, "malformed quoted string");
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (!values.emplace(full, *value).second) {
            throw config_error(line_no, "duplicate key " + full);
        }
    }
    return values;
}

ConfigValues load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path));
}

std::string_view to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::Inference: return "inference";
        case BackendKind::File: return "file";
        case BackendKind::Stub: return "stub";
    }
    return "unknown";
}

std::string_view to_string(ClusterMode mode) {
    switch (mode) {
        case ClusterMode::KnownK: return "known-k";
        case ClusterMode::Elbow: return "elbow";
        case ClusterMode::Optics: return "optics";
    }
    return "unknown";
}

BackendKind parse_backend_kind(std::string_view text) {
    if (text == "inference") return BackendKind::Inference;
    if (text == "file") return BackendKind::File;
    if (text == "stub") return BackendKind::Stub;
    throw Error(ErrorKind::Validation, "unknown backend '" + std::string(text) + "' (inference, file, stub)");
}

ClusterMode parse_cluster_mode(std::string_view text) {
    if (text == "known-k") return ClusterMode::KnownK;
    if (text == "elbow") return ClusterMode::Elbow;
    if (text == "optics") return ClusterMode::Optics;
    throw Error(ErrorKind::Validation, "unknown mode '" + std::string(text) + "' (known-k, elbow, optics)");
}

std::vector<int> parse_grid(std::string_view text) {
    const std::string s(trim(text));
    auto num = [&](const std::string& part) {
        return to_number<int>("cluster.grid", std::string(trim(part)));
    };
    std::vector<int> grid;
    if (s.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::istringstream in(s);
        for (std::string p; std::getline(in, p, ':');) {
            parts.push_back(p);
        }
        if (parts.size() < 2 || parts.size() > 3) {
            throw Error(ErrorKind::Validation, "grid range must be lo:hi or lo:hi:step");
        }
        const int lo = num(parts[0]);
        const int hi = num(parts[1]);
        const int step = parts.size() == 3 ? num(parts[2]) : 1;
        if (step < 1 || hi < lo) {
            throw Error(ErrorKind::Validation, "grid range '" + s + "' is empty");
        }
        for (int k = lo; k <= hi; k += step) {
            grid.push_back(k);
        }
    } else {
        std::istringstream in(s);
        for (std::string p; std::getline(in, p, ',');) {
            grid.push_back(num(p));
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

RunConfig config_from_values(const ConfigValues& values) {
    static const std::set<std::string> kKnown = {
        "dataset.path", "dataset.format", "prompt.template",
        "backend.kind", "backend.model", "backend.max_length", "backend.batch_size",
        "backend.normalize", "backend.command", "backend.stub_mode", "backend.stub_dim",
        "backend.stub_noise", "backend.embeddings",
        "cluster.mode", "cluster.k", "cluster.grid", "cluster.min_samples", "cluster.seed",
        "output.dir"};
    for (const auto& [key, value] : values) {
        if (!kKnown.contains(key)) {
            throw Error(ErrorKind::Validation, "unknown config key '" + key + "'");
        }
    }

    RunConfig c;
    auto get = [&](const char* key) -> const std::string* {
        const auto it = values.find(key);
        return it == values.end() ? nullptr : &it->second;
    };
    if (auto v = get("dataset.path")) c.dataset_path = *v;
    if (auto v = get("dataset.format")) c.format = *v;
    if (auto v = get("prompt.template")) c.template_id = parse_template_id(*v);
    if (auto v = get("backend.kind")) c.backend.kind = parse_backend_kind(*v);
    if (auto v = get("backend.model")) c.backend.model_path = *v;
    if (auto v = get("backend.max_length")) c.backend.max_length = to_number<std::size_t>("backend.max_length", *v);
    if (auto v = get("backend.batch_size")) c.backend.batch_size = to_number<std::size_t>("backend.batch_size", *v);
    if (auto v = get("backend.normalize")) c.backend.normalize = to_bool("backend.normalize", *v);
    if (auto v = get("backend.command")) c.backend.command = split_words(*v);
    if (auto v = get("backend.stub_mode")) c.backend.stub_mode = *v;
    if (auto v = get("backend.stub_dim")) c.backend.stub_dim = to_number<std::size_t>("backend.stub_dim", *v);
    if (auto v = get("backend.stub_noise")) c.backend.stub_noise = to_number<double>("backend.stub_noise", *v);
    if (auto v = get("backend.embeddings")) c.backend.embeddings = *v;
    if (auto v = get("cluster.mode")) c.cluster.mode = parse_cluster_mode(*v);
    if (auto v = get("cluster.k")) c.cluster.k = to_number<int>("cluster.k", *v);
    if (auto v = get("cluster.grid")) c.cluster.grid = parse_grid(*v);
    if (auto v = get("cluster.min_samples")) c.cluster.min_samples = to_number<int>("cluster.min_samples", *v);
    if (auto v = get("cluster.seed")) c.cluster.seed = to_number<std::uint64_t>("cluster.seed", *v);
    if (auto v = get("output.dir")) c.out_dir = *v;
    return c;
}

void validate_for_encode(const RunConfig& c) {
    if (c.dataset_path.empty()) {
        throw Error(ErrorKind::Argument, "no dataset given (--dataset or dataset.path)");
    }
    if (!std::filesystem::exists(c.dataset_path)) {
        throw Error(ErrorKind::Io, "dataset not found: " + c.dataset_path);
    }
    if (c.format != "fewrel" && c.format != "unlabeled") {
        throw Error(ErrorKind::Validation, "unknown format '" + c.format + "' (fewrel, unlabeled)");
    }
    const BackendSpec& b = c.backend;
    if (b.max_length < 4 || b.batch_size < 1) {
        throw Error(ErrorKind::Validation, "backend max_length must be >= 4 and batch_size >= 1");
    }
    switch (b.kind) {
        case BackendKind::Stub:
            if (b.stub_mode != "oracle" && b.stub_mode != "hash") {
                throw Error(ErrorKind::Validation, "stub_mode must be oracle or hash");
            }
            if (b.stub_dim < 1 || !(b.stub_noise >= 0.0)) {
                throw Error(ErrorKind::Validation, "stub_dim must be positive and stub_noise non-negative");
            }
            break;
        case BackendKind::File:
            if (b.embeddings.empty()) {
                throw Error(ErrorKind::Validation, "the file backend needs backend.embeddings (--embeddings)");
            }
            if (!std::filesystem::exists(b.embeddings)) {
                throw Error(ErrorKind::Io, "embeddings file not found: " + b.embeddings);
            }
            break;
        case BackendKind::Inference:
            if (b.model_path.empty()) {
                throw Error(ErrorKind::Validation, "the inference backend needs backend.model (--model)");
            }
            break;
    }
}

void validate_for_cluster(const RunConfig& c) {
    const ClusterSpec& s = c.cluster;
    switch (s.mode) {
        case ClusterMode::KnownK:
            if (!s.k) {
                throw Error(ErrorKind::Validation, "mode known-k requires k (--k or cluster.k)");
            }
            if (*s.k < 1) {
                throw Error(ErrorKind::Validation, "k must be at least 1");
            }
            break;
        case ClusterMode::Optics:
            if (s.min_samples < 2) {
                throw Error(ErrorKind::Validation, "min_samples must be at least 2");
            }
            break;
        case ClusterMode::Elbow:
            if (!s.grid.empty() && s.grid.size() < 4) {
                throw Error(ErrorKind::Validation, "the elbow grid needs at least 4 values");
            }
            break;
    }
}

std::string encode_config_hash(const RunConfig& c, std::string_view dataset_bytes) {
    nlohmann::json j;
    j["stage"] = "encode";
    j["version"] = 1;
    j["dataset"] = to_hex(fnv1a64(dataset_bytes));
    j["format"] = c.format;
    j["template"] = std::string(to_string(c.template_id));
    j["backend"] = std::string(to_string(c.backend.kind));
    j["normalize"] = c.backend.normalize;
    j["max_length"] = c.backend.max_length;
    switch (c.backend.kind) {
        case BackendKind::Stub:
            j["stub_mode"] = c.backend.stub_mode;
            j["stub_dim"] = c.backend.stub_dim;
            j["stub_noise"] = c.backend.stub_noise;
            j["seed"] = c.cluster.seed;
            break;
        case BackendKind::File:
            j["embeddings"] = to_hex(fnv1a64(read_file(c.backend.embeddings)));
            break;
        case BackendKind::Inference:
            j["model"] = c.backend.model_path;
            break;
    }
    return to_hex(fnv1a64(j.dump()));
}

std::string cluster_config_hash(const RunConfig& c, std::string_view input_hash) {
    nlohmann::json j;
    j["stage"] = "cluster";
    j["version"] = 1;
    j["input"] = std::string(input_hash);
    j["mode"] = std::string(to_string(c.cluster.mode));
    j["seed"] = c.cluster.seed;
    switch (c.cluster.mode) {
        case ClusterMode::KnownK: j["k"] = c.cluster.k.value_or(0); break;
        case ClusterMode::Elbow: j["grid"] = c.cluster.grid; break;
        case ClusterMode::Optics: j["min_samples"] = c.cluster.min_samples; break;
    }
    return to_hex(fnv1a64(j.dump()));
}

}  // namespace relclust::cli
