#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "relclust/analysis.hpp"
#include "relclust/backends.hpp"
#include "relclust/cache.hpp"
#include "relclust/clustering.hpp"
#include "relclust/corpus.hpp"
#include "relclust/encoder.hpp"
#include "relclust/io.hpp"
#include "relclust/metrics.hpp"
#include "relclust/prompt.hpp"
#include "stage_files.hpp"

namespace relclust::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Io:
        case ErrorKind::Argument:
            return 2;
        case ErrorKind::Validation:
        case ErrorKind::Parse:
        case ErrorKind::Format:
        case ErrorKind::Corruption:
            return 3;
        case ErrorKind::Backend:
            return 4;
    }
    return 1;
}

std::string error_json(std::string_view kind, std::string_view message) {
    json j;
    j["error"] = {{"kind", std::string(kind)}, {"message", std::string(message)}};
    return j.dump();
}

namespace {

void log(const std::string& msg) {
    std::cerr << "[relclust] " << msg << '\n';
}

// Command-line values; unset ones leave the config file (or default) alone.
struct Flags {
    std::string config;
    std::optional<std::string> dataset, format, tmpl, backend, mode, out, grid, model, embeddings, stub_mode;
    std::optional<int> k, min_samples;
    std::optional<std::uint64_t> seed;
    std::string cache, assignment;
    bool force = false;
    bool normalize = false;
    bool dump_prompts = false;
    std::size_t name_tokens = 5;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "TOML-like run configuration");
    cmd->add_option("--dataset", f.dataset, "dataset JSON file");
    cmd->add_option("--format", f.format, "dataset layout")->check(CLI::IsMember({"fewrel", "unlabeled"}));
    cmd->add_option("--template", f.tmpl, "prompt template")->check(CLI::IsMember({"p", "p-empty", "p1", "p2", "p3"}));
    cmd->add_option("--backend", f.backend, "encoder backend")->check(CLI::IsMember({"inference", "file", "stub"}));
    cmd->add_option("--model", f.model, "model directory for the inference backend");
    cmd->add_option("--embeddings", f.embeddings, "embedding cache served by the file backend");
    cmd->add_option("--stub-mode", f.stub_mode, "stub backend mode")->check(CLI::IsMember({"oracle", "hash"}));
    cmd->add_flag("--normalize", f.normalize, "L2-normalize embeddings");
    cmd->add_option("--k", f.k, "number of clusters (known-k)");
    cmd->add_option("--mode", f.mode, "clustering mode")->check(CLI::IsMember({"known-k", "elbow", "optics"}));
    cmd->add_option("--grid", f.grid, "elbow grid: lo:hi, lo:hi:step or a,b,c");
    cmd->add_option("--min-samples", f.min_samples, "OPTICS min_samples");
    cmd->add_option("--seed", f.seed, "random seed (default 0)");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--cache", f.cache, "embedding cache (default <out>/embeddings.pore)");
    cmd->add_option("--assignment", f.assignment, "assignment file (default <out>/assignment.jsonl)");
    cmd->add_flag("--force", f.force, "overwrite or accept stage files with a different config hash");
    cmd->add_flag("--dump-prompts", f.dump_prompts, "also write the rendered prompts");
    cmd->add_option("--m", f.name_tokens, "tokens per cluster in cluster names")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : config_from_values(load_config(f.config));
    if (f.dataset) c.dataset_path = *f.dataset;
    if (f.format) c.format = *f.format;
    if (f.tmpl) c.template_id = parse_template_id(*f.tmpl);
    if (f.backend) c.backend.kind = parse_backend_kind(*f.backend);
    if (f.model) c.backend.model_path = *f.model;
    if (f.embeddings) c.backend.embeddings = *f.embeddings;
    if (f.stub_mode) c.backend.stub_mode = *f.stub_mode;
    if (f.normalize) c.backend.normalize = true;
    if (f.k) c.cluster.k = *f.k;
    if (f.mode) c.cluster.mode = parse_cluster_mode(*f.mode);
    if (f.grid) c.cluster.grid = parse_grid(*f.grid);
    if (f.min_samples) c.cluster.min_samples = *f.min_samples;
    if (f.seed) c.cluster.seed = *f.seed;
    if (f.out) c.out_dir = *f.out;
    return c;
}

struct Paths {
    fs::path out;
    fs::path cache;
    fs::path assignment;
};

Paths paths_for(const RunConfig& c, const Flags& f) {
    Paths p;
    p.out = c.out_dir;
    p.cache = f.cache.empty() ? p.out / "embeddings.pore" : fs::path(f.cache);
    p.assignment = f.assignment.empty() ? p.out / "assignment.jsonl" : fs::path(f.assignment);
    return p;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

Dataset load_dataset(const RunConfig& c, std::string* bytes_out = nullptr) {
    if (c.dataset_path.empty()) {
        throw Error(ErrorKind::Argument, "no dataset given (--dataset or dataset.path)");
    }
    const std::string bytes = read_file(c.dataset_path);
    std::vector<std::string> warnings;
    const std::string name = fs::path(c.dataset_path).stem().string();
    Dataset d = c.format == "unlabeled" ? parse_unlabeled(bytes, name, &warnings)
                                        : parse_fewrel(bytes, name, &warnings);
    for (const std::string& w : warnings) {
        log("warning: " + w);
    }
    if (bytes_out) {
        *bytes_out = bytes;
    }
    return d;
}

fs::path self_dir() {
    std::error_code ec;
    const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
    return ec ? fs::current_path() : exe.parent_path();
}

std::unique_ptr<MlmBackend> make_backend(const RunConfig& c, const Dataset& dataset) {
    const BackendSpec& b = c.backend;
    switch (b.kind) {
        case BackendKind::Stub: {
            StubOptions o;
            o.mode = b.stub_mode == "oracle" ? StubOptions::Mode::Oracle : StubOptions::Mode::Hash;
            o.dim = b.stub_dim;
            o.max_length = b.max_length;
            o.noise = b.stub_noise;
            o.seed = c.cluster.seed;
            if (o.mode == StubOptions::Mode::Oracle) {
                if (!dataset.labeled()) {
                    throw Error(ErrorKind::Validation, "the oracle stub needs a labeled dataset");
                }
                for (const RelationInstance& inst : dataset.instances) {
                    o.labels.emplace(inst.instance_id, *inst.gold_relation);
                }
            }
            return std::make_unique<StubBackend>(std::move(o));
        }
        case BackendKind::File:
            return FileBackend::open(b.embeddings);
        case BackendKind::Inference: {
            SubprocessOptions o;
            o.command = b.command;
            if (o.command.empty()) {
                o.command = {"python3", (self_dir() / "mlm_server.py").string()};
            }
            o.model_path = b.model_path;
            o.max_length = b.max_length;
            o.batch_size = b.batch_size;
            return std::make_unique<SubprocessBackend>(std::move(o));
        }
    }
    throw Error(ErrorKind::Argument, "unknown backend");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// ---- encode ------------------------------------------------------------------

void cmd_encode(const RunConfig& c, const Flags& f, const Paths& p) {
    validate_for_encode(c);
    const auto t0 = std::chrono::steady_clock::now();
    std::string bytes;
    const Dataset dataset = load_dataset(c, &bytes);
    validate(dataset);
    const std::string hash = encode_config_hash(c, bytes);

    const PromptTemplate tmpl = PromptTemplate::builtin(c.template_id);
    const std::vector<RenderedPrompt> prompts = render_all(tmpl, dataset);
    auto backend = make_backend(c, dataset);
    log("encode: backend " + backend->name() + ", template " + std::string(to_string(c.template_id)) +
        ", seed " + std::to_string(c.cluster.seed));

    EncodeOptions opts;
    opts.normalize = c.backend.normalize;
    const EncodeResult result = encode(*backend, prompts, opts);

    ensure_dir(p.out);
    if (p.cache.has_parent_path()) {
        ensure_dir(p.cache.parent_path());
    }
    save_cache(result.matrix, p.cache, hash);
    if (f.dump_prompts) {
        write_file_atomic(p.out / "prompts.jsonl", prompts_to_jsonl(prompts));
    }
    if (!result.failures.empty()) {
        std::string lines;
        for (const EncodeFailure& fail : result.failures) {
            json j{{"index", fail.prompt_index}, {"instance_id", fail.instance_id}, {"reason", fail.reason}};
            lines += j.dump() + "\n";
            log("encode: excluded " + fail.instance_id + ": " + fail.reason);
        }
        write_file_atomic(p.out / "encode_failures.jsonl", lines);
    }
    log("encode: " + std::to_string(dataset.size()) + " instances, " + std::to_string(prompts.size()) +
        " prompts, " + std::to_string(result.matrix.rows()) + " embedded, " +
        std::to_string(result.failures.size()) + " failed, dim " + std::to_string(result.matrix.dim()) +
        " (" + fixed(seconds_since(t0), 1) + " s)");
    log("encode: wrote " + p.cache.string() + " (config " + hash + ")");
}

// Returns true when the cache already matches the configuration.
bool cache_is_current(const RunConfig& c, const Paths& p, bool force) {
    if (!fs::exists(p.cache)) {
        return false;
    }
    validate_for_encode(c);
    const std::string expected = encode_config_hash(c, read_file(c.dataset_path));
    const CacheFile cache = load_cache_file(p.cache);
    if (cache.config_hash == expected) {
        log("encode: cache " + p.cache.string() + " is up to date (config " + expected + "), skipping encoding");
        return true;
    }
    if (!force) {
        throw Error(ErrorKind::Validation, "existing cache " + p.cache.string() + " has config hash '" +
                                               cache.config_hash + "' but this run expects '" + expected +
                                               "'; pass --force to re-encode");
    }
    log("encode: cache config differs, re-encoding (--force)");
    return false;
}

// ---- cluster -----------------------------------------------------------------

// Hash identifying the cache contents for downstream stages.
std::string cache_identity(const CacheFile& cache) {
    return cache.config_hash.empty() ? to_hex(cache.payload_checksum) : cache.config_hash;
}

void check_cache_matches(const RunConfig& c, const CacheFile& cache, const Paths& p, bool force) {
    if (force || c.dataset_path.empty() || cache.config_hash.empty() || !fs::exists(c.dataset_path)) {
        return;
    }
    if (c.backend.kind == BackendKind::File && c.backend.embeddings.empty()) {
        return;
    }
    const std::string expected = encode_config_hash(c, read_file(c.dataset_path));
    if (expected != cache.config_hash) {
        throw Error(ErrorKind::Validation, "cache " + p.cache.string() + " was built with config '" +
                                               cache.config_hash + "', this configuration expects '" +
                                               expected + "'; re-encode or pass --force");
    }
}

void cmd_cluster(const RunConfig& c, const Flags& f, const Paths& p) {
    validate_for_cluster(c);
    const auto t0 = std::chrono::steady_clock::now();
    const CacheFile cache = load_cache_file(p.cache);
    check_cache_matches(c, cache, p, f.force);
    const EmbeddingMatrix& m = cache.matrix;
    if (m.rows() == 0) {
        throw Error(ErrorKind::Validation, "cache " + p.cache.string() + " holds no embeddings");
    }
    log("cluster: " + std::to_string(m.rows()) + " x " + std::to_string(m.dim()) + " embeddings, mode " +
        std::string(to_string(c.cluster.mode)) + ", seed " + std::to_string(c.cluster.seed));

    ensure_dir(p.out);
    ClusterAssignment a;
    switch (c.cluster.mode) {
        case ClusterMode::KnownK:
            if (static_cast<std::size_t>(*c.cluster.k) > m.rows()) {
                throw Error(ErrorKind::Validation, "k = " + std::to_string(*c.cluster.k) + " exceeds the " +
                                                       std::to_string(m.rows()) + " embedded instances");
            }
            a = kmeans(m.view(), *c.cluster.k, c.cluster.seed);
            break;
        case ClusterMode::Optics:
            if (static_cast<std::size_t>(c.cluster.min_samples) > m.rows()) {
                throw Error(ErrorKind::Validation, "min_samples exceeds the number of instances");
            }
            a = optics(m.view(), c.cluster.min_samples);
            a.seed = c.cluster.seed;
            break;
        case ClusterMode::Elbow: {
            auto [curve, assignment] = cluster_auto(m.view(), c.cluster.seed, c.cluster.grid);
            write_file_atomic(p.out / "elbow.csv", elbow_to_csv(curve));
            log("cluster: elbow k_hat = " + std::to_string(curve.k_hat) + " (" + curve.rule + ")");
            a = std::move(assignment);
            break;
        }
    }
    a.instance_ids = m.instance_ids();

    AssignmentFile file;
    file.input_hash = cache_identity(cache);
    file.config_hash = cluster_config_hash(c, file.input_hash);
    file.assignment = std::move(a);
    if (p.assignment.has_parent_path()) {
        ensure_dir(p.assignment.parent_path());
    }
    write_file_atomic(p.assignment, assignment_to_jsonl(file));
    log("cluster: k = " + std::to_string(file.assignment.k) + ", wrote " + p.assignment.string() + " (" +
        fixed(seconds_since(t0), 1) + " s)");
}

void cmd_estimate_k(const RunConfig& c, const Paths& p) {
    const CacheFile cache = load_cache_file(p.cache);
    const EmbeddingMatrix& m = cache.matrix;
    const std::vector<int> grid = c.cluster.grid.empty() ? default_k_grid(m.rows()) : c.cluster.grid;
    log("estimate-k: " + std::to_string(grid.size()) + " grid points, seed " + std::to_string(c.cluster.seed));
    const ElbowCurve curve = estimate_k_elbow(m.view(), grid, c.cluster.seed);
    ensure_dir(p.out);
    write_file_atomic(p.out / "elbow.csv", elbow_to_csv(curve));
    std::cout << "k_hat = " << curve.k_hat << " (" << curve.rule << ", bandwidth " << curve.bandwidth << ")\n";
}

// ---- evaluate / report ---------------------------------------------------------

void cmd_evaluate(const RunConfig& c, const Paths& p) {
    const Dataset dataset = load_dataset(c);
    if (!dataset.labeled()) {
        throw Error(ErrorKind::Validation, "evaluation requires gold labels; dataset " + c.dataset_path +
                                               " is unlabeled");
    }
    const AssignmentFile file = load_assignment(p.assignment);
    const EvaluationReport report = evaluate(dataset, file.assignment);
    ensure_dir(p.out);
    write_file_atomic(p.out / "evaluation.json", evaluation_to_json(report, file.config_hash).dump(2) + "\n");
    std::cout << evaluation_table(report);
}

void cmd_report(const RunConfig& c, const Flags& f, const Paths& p) {
    const Dataset dataset = load_dataset(c);
    const AssignmentFile file = load_assignment(p.assignment);
    const ClusterAssignment& a = file.assignment;
    ensure_dir(p.out);

    std::map<int, ClusterReport> reports;
    if (dataset.labeled()) {
        const ConfusionMatrix raw = confusion(dataset, a);
        const ConfusionMatrix diag = diagonalize(raw);
        write_file_atomic(p.out / "confusion.csv", confusion_to_csv(diag));
        write_file_atomic(p.out / "confusion.pgm", confusion_to_pgm(diag));
        log("report: confusion " + std::to_string(diag.rows()) + " x " + std::to_string(diag.cols()) +
            ", matched mass " + std::to_string(diag.diagonal_mass()) + " of " + std::to_string(diag.total()));
        for (int id : raw.cluster_ids) {
            reports.emplace(id, cluster_composition(dataset, a, id));
        }
    } else {
        log("report: dataset is unlabeled, skipping confusion matrix and compositions");
        for (int label : a.labels) {
            ClusterReport& r = reports[label];
            r.cluster_id = label;
            ++r.size;
        }
    }

    json clusters;
    clusters["type"] = "clusters";
    clusters["version"] = kStageVersion;
    clusters["config_hash"] = file.config_hash;
    clusters["clusters"] = json::array();
    for (const auto& [id, r] : reports) {
        clusters["clusters"].push_back(cluster_report_to_json(r));
    }
    write_file_atomic(p.out / "clusters.json", clusters.dump(2) + "\n");

    if (c.backend.kind == BackendKind::File) {
        log("report: the file backend has no MLM head, skipping cluster names");
        return;
    }
    validate_for_encode(c);
    auto backend = make_backend(c, dataset);
    if (!backend->has_mlm_head()) {
        log("report: backend " + backend->name() + " has no MLM head, skipping cluster names");
        return;
    }
    std::unordered_map<std::string, const RelationInstance*> by_id;
    for (const RelationInstance& inst : dataset.instances) {
        by_id.emplace(inst.instance_id, &inst);
    }
    const PromptTemplate tmpl = PromptTemplate::builtin(c.template_id);
    std::vector<RenderedPrompt> prompts;
    prompts.reserve(a.labels.size());
    for (const std::string& id : a.instance_ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw Error(ErrorKind::Validation, "assignment instance '" + id + "' is not in the dataset");
        }
        prompts.push_back(render(tmpl, *it->second));
    }
    const std::vector<ClusterReport> names = name_clusters(*backend, prompts, a, f.name_tokens);
    json out;
    out["type"] = "cluster_names";
    out["version"] = kStageVersion;
    out["config_hash"] = file.config_hash;
    out["clusters"] = json::array();
    for (const ClusterReport& r : names) {
        out["clusters"].push_back(cluster_report_to_json(r));
    }
    write_file_atomic(p.out / "cluster_names.json", out.dump(2) + "\n");
    log("report: named " + std::to_string(names.size()) + " clusters with backend " + backend->name());
}

void cmd_pipeline(const RunConfig& c, const Flags& f, const Paths& p) {
    validate_for_encode(c);
    validate_for_cluster(c);
    const auto t0 = std::chrono::steady_clock::now();
    if (!cache_is_current(c, p, f.force)) {
        cmd_encode(c, f, p);
    }
    cmd_cluster(c, f, p);
    if (load_dataset(c).labeled()) {
        cmd_evaluate(c, p);
    } else {
        log("pipeline: dataset is unlabeled, skipping evaluation");
    }
    cmd_report(c, f, p);
    log("pipeline: done in " + fixed(seconds_since(t0), 1) + " s");
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Unsupervised relation clustering from masked-LM prompt embeddings"};
    app.require_subcommand(1);
    Flags flags;
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"encode", "render prompts and write the embedding cache"},
        {"cluster", "cluster a cache (known-k, elbow or optics)"},
        {"estimate-k", "elbow estimate of k from a cache"},
        {"evaluate", "score an assignment against gold labels"},
        {"report", "confusion matrix, cluster compositions and names"},
        {"pipeline", "encode, cluster, evaluate and report"},
    };
    for (const Sub& s : subs) {
        add_common(app.add_subcommand(s.name, s.help), flags);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << error_json("usage", e.what()) << '\n';
        return 2;
    }

    try {
        const RunConfig config = resolve(flags);
        const Paths paths = paths_for(config, flags);
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "encode") {
            cmd_encode(config, flags, paths);
        } else if (cmd == "cluster") {
            cmd_cluster(config, flags, paths);
        } else if (cmd == "estimate-k") {
            cmd_estimate_k(config, paths);
        } else if (cmd == "evaluate") {
            cmd_evaluate(config, paths);
        } else if (cmd == "report") {
            cmd_report(config, flags, paths);
        } else {
            cmd_pipeline(config, flags, paths);
        }
    } catch (const Error& e) {
        std::cerr << error_json(to_string(e.kind()), e.what()) << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << error_json("internal", e.what()) << '\n';
        return 1;
    }
    return 0;
}

}  // namespace relclust::cli
