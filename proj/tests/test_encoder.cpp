#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "relclust/backends.hpp"
#include "relclust/cache.hpp"
#include "relclust/clustering.hpp"
#include "relclust/encoder.hpp"
#include "relclust/io.hpp"
#include "relclust/metrics.hpp"
#include "synth.hpp"

using namespace relclust;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "relclust-test-encoder";
    fs::create_directories(dir);
    return dir / name;
}

StubOptions oracle_options(const Dataset& ds, std::size_t dim) {
    StubOptions opt;
    opt.mode = StubOptions::Mode::Oracle;
    opt.dim = dim;
    for (const auto& inst : ds.instances) {
        opt.labels[inst.instance_id] = *inst.gold_relation;
    }
    return opt;
}

std::vector<RenderedPrompt> prompts_of(const Dataset& ds) {
    return render_all(PromptTemplate::builtin(TemplateId::P), ds);
}

}  // namespace

TEST_CASE("hash stub is deterministic") {
    StubBackend stub(StubOptions{});
    RenderedPrompt p = render(PromptTemplate::builtin(TemplateId::P), synth::make_corpus(1, 1, 0).instances[0]);
    const std::vector<RenderedPrompt> twice = {p, p};
    const EncodeResult r = encode(stub, twice);
    REQUIRE(r.matrix.rows() == 2);
    CHECK(r.matrix.dim() == 768);
    CHECK(std::equal(r.matrix.row(0).begin(), r.matrix.row(0).end(), r.matrix.row(1).begin()));
    double norm = 0.0;
    for (float v : r.matrix.row(0)) norm += static_cast<double>(v) * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("empty prompt list gives a 0 x d matrix") {
    StubBackend stub(StubOptions{});
    const EncodeResult r = encode(stub, std::vector<RenderedPrompt>{});
    CHECK(r.matrix.rows() == 0);
    CHECK(r.matrix.dim() == 768);
    CHECK(r.failures.empty());
}

TEST_CASE("encode shape, order equivariance and normalization") {
    const Dataset ds = synth::make_corpus(3, 4, 1);
    const auto prompts = prompts_of(ds);
    StubBackend stub(oracle_options(ds, 32));
    const EncodeResult r = encode(stub, prompts);
    REQUIRE(r.matrix.rows() == prompts.size());
    CHECK(r.matrix.dim() == stub.hidden_dim());

    std::vector<std::size_t> perm(prompts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::rotate(perm.begin(), perm.begin() + 5, perm.end());
    std::vector<RenderedPrompt> shuffled;
    for (std::size_t i : perm) shuffled.push_back(prompts[i]);
    const EncodeResult rs = encode(stub, shuffled);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        CHECK(std::equal(rs.matrix.row(i).begin(), rs.matrix.row(i).end(), r.matrix.row(perm[i]).begin()));
        CHECK(rs.matrix.instance_ids()[i] == r.matrix.instance_ids()[perm[i]]);
    }

    const EncodeResult rn = encode(stub, prompts, EncodeOptions{true});
    CHECK(rn.matrix.normalized());
    for (std::size_t i = 0; i < rn.matrix.rows(); ++i) {
        double norm = 0.0;
        for (float v : rn.matrix.row(i)) norm += static_cast<double>(v) * v;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("over-length prompts become failures") {
    const Dataset ds = synth::make_corpus(2, 2, 1);
    auto prompts = prompts_of(ds);
    std::string filler;
    for (int i = 0; i < 600; ++i) filler += "w ";
    prompts[1].text.insert(6, filler);
    StubBackend stub(StubOptions{});
    const EncodeResult r = encode(stub, prompts);
    CHECK(r.matrix.rows() == 3);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].prompt_index == 1);
    CHECK(r.failures[0].instance_id == prompts[1].source_instance_id);
    CHECK(r.matrix.instance_ids()[1] == prompts[2].source_instance_id);
}

TEST_CASE("oracle stub separates relations") {
    const Dataset ds = synth::make_corpus(5, 40, 2);
    StubBackend stub(oracle_options(ds, 64));
    const EncodeResult r = encode(stub, prompts_of(ds));
    const ClusterAssignment a = kmeans(r.matrix.view(), 5, 0);
    std::vector<int> gold;
    for (const auto& inst : ds.instances) gold.push_back(std::stoi(inst.gold_relation->substr(1)));
    CHECK(ari(gold, a.labels) == doctest::Approx(1.0));
}

TEST_CASE("stub top tokens") {
    const Dataset ds = synth::make_corpus(2, 1, 0);
    StubOptions opt = oracle_options(ds, 8);
    opt.labels[ds.instances[0].instance_id] = "married";
    opt.labels[ds.instances[1].instance_id] = "borders";
    StubBackend stub(opt);
    const auto prompts = prompts_of(ds);
    const auto top = top_tokens_for(stub, prompts[0], 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].token == "married");
    CHECK(top[0].score >= top[1].score);
    CHECK(top[1].score >= top[2].score);
    CHECK(top_tokens_for(stub, prompts[1], 1)[0].token == "borders");
    try {
        top_tokens_for(stub, prompts[0], stub.vocabulary().size() + 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("m exceeds vocabulary") != std::string::npos);
    }
}

TEST_CASE("cache round trip and layout") {
    std::vector<float> values(12);
    std::iota(values.begin(), values.end(), -5.5f);
    const EmbeddingMatrix m(3, 4, values, {"a", "b", "c"}, "p", "stub-hash", false);
    const std::string bytes = encode_cache(m, "abc123");

    std::uint32_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + 4, 4);
    CHECK(bytes.substr(0, 4) == "PORE");
    CHECK(bytes.size() == 4 + 4 + header_len + 48 + 8);
    CHECK(std::memcmp(bytes.data() + 8 + header_len, values.data(), 48) == 0);

    const CacheFile back = decode_cache(bytes);
    CHECK(back.matrix == m);
    CHECK(back.config_hash == "abc123");
    CHECK(encode_cache(back.matrix, back.config_hash) == bytes);

    const fs::path path = scratch("round.pore");
    save_cache(m, path);
    CHECK(load_cache(path) == m);
    CHECK(load_cache_file(path).config_hash.empty());
}

TEST_CASE("damaged caches") {
    const EmbeddingMatrix m(2, 2, {1, 2, 3, 4}, {"a", "b"}, "p", "stub-hash");
    const std::string bytes = encode_cache(m);
    auto kind = [](std::string_view b) {
        try {
            decode_cache(b);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Io;
    };
    CHECK(kind(std::string_view(bytes).substr(0, bytes.size() - 3)) == ErrorKind::Corruption);
    CHECK(kind(std::string_view(bytes).substr(0, 6)) == ErrorKind::Corruption);
    std::string flipped = bytes;
    flipped[flipped.size() - 12] ^= 0x40;
    CHECK(kind(flipped) == ErrorKind::Corruption);
    std::string magic = bytes;
    magic[0] = 'X';
    CHECK(kind(magic) == ErrorKind::Format);
}

TEST_CASE("file backend serves cached rows") {
    const Dataset ds = synth::make_corpus(2, 3, 4);
    const auto prompts = prompts_of(ds);
    StubBackend stub(oracle_options(ds, 16));
    const EncodeResult r = encode(stub, prompts);
    const fs::path path = scratch("file-backend.pore");
    save_cache(r.matrix, path);
    auto fb = FileBackend::open(path);
    CHECK(fb->hidden_dim() == 16);
    CHECK_FALSE(fb->has_mlm_head());
    std::vector<RenderedPrompt> reversed(prompts.rbegin(), prompts.rend());
    const EncodeResult again = encode(*fb, reversed);
    for (std::size_t i = 0; i < reversed.size(); ++i) {
        const std::size_t j = reversed.size() - 1 - i;
        CHECK(std::equal(again.matrix.row(i).begin(), again.matrix.row(i).end(), r.matrix.row(j).begin()));
    }
    RenderedPrompt unknown = prompts[0];
    unknown.source_instance_id = "missing";
    CHECK_THROWS_AS(encode(*fb, std::vector<RenderedPrompt>{unknown}), Error);
}

TEST_CASE("subprocess backend protocol") {
    const fs::path script = scratch("fake_server.py");
    {
        std::ofstream out(script);
        out << R"(import json, sys
limit = int(sys.argv[sys.argv.index("--max-length") + 1])
for line in sys.stdin:
    req = json.loads(line)
    op = req["op"]
    if op == "info":
        rep = {"name": "fake", "hidden_dim": 3, "mlm_head": True}
    elif op == "tokenize":
        words = req["text"].split()
        if len(words) > limit:
            rep = {"error": "too_long", "length": len(words)}
        else:
            rep = {"ids": [len(w) for w in words], "mask": words.index("[MASK]")}
    elif op == "embed":
        rep = {"vectors": [[float(len(b["ids"])), float(b["mask"]), float(sum(b["ids"]))] for b in req["batch"]]}
    elif op == "top":
        rep = {"tokens": [["tok%d" % i, 1.0 / (i + 1)] for i in range(req["m"])]}
    else:
        rep = {"error": "unknown op"}
    sys.stdout.write(json.dumps(rep) + "\n")
    sys.stdout.flush()
)";
    }
    SubprocessOptions opt;
    opt.command = {"python3", script.string()};
    opt.max_length = 12;
    opt.batch_size = 2;
    SubprocessBackend backend(opt);
    CHECK(backend.name() == "fake");
    CHECK(backend.hidden_dim() == 3);
    CHECK(backend.has_mlm_head());

    const Dataset ds = synth::make_corpus(2, 2, 0);
    const auto prompts = prompts_of(ds);
    const EncodeResult r = encode(backend, prompts);
    REQUIRE(r.matrix.rows() == prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        CHECK(r.matrix.row(i)[0] == 10.0f);  // words in a template P prompt
        CHECK(r.matrix.row(i)[1] == 7.0f);
    }
    const auto top = top_tokens_for(backend, prompts[0], 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].token == "tok0");

    auto long_prompt = prompts[0];
    long_prompt.text = "[CLS] a b c d e f g h i j k l [MASK] [SEP]";
    const EncodeResult lr = encode(backend, std::vector<RenderedPrompt>{long_prompt});
    CHECK(lr.failures.size() == 1);
}

TEST_CASE("subprocess backend reports a dead server") {
    SubprocessOptions opt;
    opt.command = {"python3", "-c", "import sys; sys.exit(1)"};
    CHECK_THROWS_AS(SubprocessBackend{opt}, Error);
}
