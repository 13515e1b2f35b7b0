#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>

#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "relclust/backends.hpp"

namespace relclust {

using nlohmann::json;

// Child process connected through one socketpair that serves as both its
// stdin and stdout.
class SubprocessBackend::Process {
public:
    explicit Process(const std::vector<std::string>& argv) {
        if (argv.empty()) {
            throw Error(ErrorKind::Argument, "inference backend command is empty");
        }
        int fds[2];
        if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
            throw Error(ErrorKind::Backend, std::string("socketpair: ") + std::strerror(errno));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            ::close(fds[0]);
            ::close(fds[1]);
            throw Error(ErrorKind::Backend, std::string("fork: ") + std::strerror(errno));
        }
        if (pid_ == 0) {
            ::dup2(fds[1], STDIN_FILENO);
            ::dup2(fds[1], STDOUT_FILENO);
            ::close(fds[0]);
            ::close(fds[1]);
            std::vector<char*> args;
            for (const std::string& a : argv) {
                args.push_back(const_cast<char*>(a.c_str()));
            }
            args.push_back(nullptr);
            ::execvp(args[0], args.data());
            ::_exit(127);
        }
        ::close(fds[1]);
        fd_ = fds[0];
    }

    ~Process() {
        if (fd_ >= 0) {
            ::close(fd_);
        }
        if (pid_ > 0) {
            int status = 0;
            ::waitpid(pid_, &status, 0);
        }
    }

    Process(const Process&) = delete;
    Process& operator=(const Process&) = delete;

    void send_line(const std::string& line) {
        std::string payload = line + "\n";
        std::size_t sent = 0;
        while (sent < payload.size()) {
            const ssize_t n = ::send(fd_, payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw Error(ErrorKind::Backend, "inference process is not accepting input");
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    std::string read_line() {
        for (;;) {
            const std::size_t nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            char chunk[65536];
            const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
            if (n < 0 && errno == EINTR) {
                continue;
            }
            if (n <= 0) {
                throw Error(ErrorKind::Backend, "inference process exited unexpectedly");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    pid_t pid_ = -1;
    int fd_ = -1;
    std::string buffer_;
};

namespace {

json parse_reply(const std::string& line) {
    json reply;
    try {
        reply = json::parse(line);
    } catch (const json::parse_error&) {
        throw Error(ErrorKind::Backend, "inference process sent malformed reply: " + line.substr(0, 200));
    }
    if (!reply.is_object()) {
        throw Error(ErrorKind::Backend, "inference process reply is not an object");
    }
    return reply;
}

json ids_payload(const TokenizedPrompt& prompt) {
    return {{"ids", prompt.ids}, {"mask", prompt.mask_position}};
}

}  // namespace

SubprocessBackend::SubprocessBackend(SubprocessOptions options) : options_(std::move(options)) {
    std::vector<std::string> argv = options_.command;
    if (!options_.model_path.empty()) {
        argv.insert(argv.end(), {"--model", options_.model_path});
    }
    argv.insert(argv.end(), {"--max-length", std::to_string(options_.max_length)});
    process_ = std::make_unique<Process>(argv);

    const json info = parse_reply(request(json{{"op", "info"}}.dump()));
    if (auto err = info.find("error"); err != info.end()) {
        throw Error(ErrorKind::Backend, "inference process failed to start: " +
                                            (err->is_string() ? err->get<std::string>() : err->dump()));
    }
    try {
        name_ = info.at("name").get<std::string>();
        hidden_dim_ = info.at("hidden_dim").get<std::size_t>();
        mlm_head_ = info.value("mlm_head", false);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Backend, std::string("bad info reply: ") + e.what());
    }
    if (hidden_dim_ == 0) {
        throw Error(ErrorKind::Backend, "inference process reports hidden_dim 0");
    }
}

SubprocessBackend::~SubprocessBackend() = default;

std::string SubprocessBackend::request(const std::string& line) {
    process_->send_line(line);
    return process_->read_line();
}

TokenizedPrompt SubprocessBackend::tokenize(const RenderedPrompt& prompt) {
    const json reply = parse_reply(request(json{{"op", "tokenize"}, {"text", prompt.text}}.dump()));
    if (auto err = reply.find("error"); err != reply.end()) {
        if (err->is_string() && *err == "too_long") {
            throw PromptTooLong(prompt.source_instance_id, reply.value("length", std::size_t{0}),
                                options_.max_length);
        }
        throw Error(ErrorKind::Backend, "tokenize failed: " + err->dump());
    }
    TokenizedPrompt out;
    out.instance_id = prompt.source_instance_id;
    try {
        out.ids = reply.at("ids").get<std::vector<std::int32_t>>();
        out.mask_position = reply.at("mask").get<std::size_t>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Backend, std::string("bad tokenize reply: ") + e.what());
    }
    if (out.mask_position >= out.ids.size()) {
        throw Error(ErrorKind::Backend, "mask position outside the token sequence");
    }
    return out;
}

std::vector<float> SubprocessBackend::mask_embedding(const TokenizedPrompt& prompt) {
    std::vector<float> out(hidden_dim_);
    mask_embeddings(std::span<const TokenizedPrompt>(&prompt, 1), out);
    return out;
}

void SubprocessBackend::mask_embeddings(std::span<const TokenizedPrompt> batch, std::span<float> out) {
    const std::size_t step = std::max<std::size_t>(1, options_.batch_size);
    for (std::size_t begin = 0; begin < batch.size(); begin += step) {
        const std::size_t end = std::min(batch.size(), begin + step);
        json items = json::array();
        for (std::size_t i = begin; i < end; ++i) {
            items.push_back(ids_payload(batch[i]));
        }
        const json reply = parse_reply(request(json{{"op", "embed"}, {"batch", items}}.dump()));
        if (reply.contains("error")) {
            throw Error(ErrorKind::Backend, "embed failed: " + reply["error"].dump());
        }
        const json& vectors = reply.value("vectors", json::array());
        if (vectors.size() != end - begin) {
            throw Error(ErrorKind::Backend, "embed reply has wrong batch size");
        }
        for (std::size_t i = begin; i < end; ++i) {
            const json& v = vectors[i - begin];
            if (!v.is_array() || v.size() != hidden_dim_) {
                throw Error(ErrorKind::Backend, "embed reply vector has wrong length");
            }
            for (std::size_t j = 0; j < hidden_dim_; ++j) {
                out[i * hidden_dim_ + j] = v[j].get<float>();
            }
        }
    }
}

std::vector<ScoredToken> SubprocessBackend::top_tokens(const TokenizedPrompt& prompt, std::size_t m) {
    if (!mlm_head_) {
        return MlmBackend::top_tokens(prompt, m);
    }
    json req = ids_payload(prompt);
    req["op"] = "top";
    req["m"] = m;
    const json reply = parse_reply(request(req.dump()));
    if (reply.contains("error")) {
        throw Error(ErrorKind::Backend, "top failed: " + reply["error"].dump());
    }
    std::vector<ScoredToken> out;
    for (const json& pair : reply.value("tokens", json::array())) {
        out.push_back({pair.at(0).get<std::string>(), pair.at(1).get<double>()});
    }
    if (out.size() != m) {
        throw Error(ErrorKind::Backend, "top reply has " + std::to_string(out.size()) +
                                            " entries, expected " + std::to_string(m));
    }
    return out;
}

}  // namespace relclust
