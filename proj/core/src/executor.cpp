#include "beestar/executor.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fcntl.h>
#include <filesystem>
#include <mutex>
#include <poll.h>
#include <unistd.h>

#include "beestar/error.hpp"
#include "beestar/process.hpp"

namespace beestar {

using Clock = std::chrono::steady_clock;

void CancelToken::cancel() {
    {
        std::lock_guard lock(mutex_);
        flag_ = true;
    }
    cv_.notify_all();
}

bool CancelToken::wait_for(std::chrono::milliseconds d) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, d, [&] { return flag_.load(); });
}

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct Failure {
    std::string reason;
};

Value builtin_sum(const Value& input) {
    double total = 0;
    if (input.type() == ValueType::Tensor) {
        for (double d : input.as_tensor().data) total += d;
        return Value::number(total);
    }
    if (input.type() != ValueType::Array) throw Failure{"sum expects an array of numbers"};
    for (const auto& v : input.as_array()) {
        if (v.type() != ValueType::Number) throw Failure{"sum expects an array of numbers"};
        total += v.as_number();
    }
    return Value::number(total);
}

Value builtin_label(const Value& input, std::string_view count) {
    if (input.type() != ValueType::String) throw Failure{"label expects a string prompt"};
    char* end = nullptr;
    const std::string n_text(count);
    const long n = std::strtol(n_text.c_str(), &end, 10);
    if (n_text.empty() || *end != '\0' || n < 0) throw Failure{"bad label count '" + n_text + "'"};
    const std::string& word = input.as_string();
    Array frames;
    frames.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        const std::string id = std::to_string(i);
        frames.push_back(Value::record({
            {"frame", Value::link("synthetic://frame/" + id)},
            {"label", Value::string(word)},
            {"match", Value::boolean((fnv1a(word + "/" + id) & 1) == 0)},
        }));
    }
    return Value::array(std::move(frames));
}

Value builtin_fetch(const Value& input) {
    if (input.type() != ValueType::Link) throw Failure{"fetch expects a link"};
    const std::string& url = input.as_link().locator;
    Array frames;
    for (int i = 0; i < 3; ++i) frames.push_back(Value::link(url + "#frame" + std::to_string(i)));
    return Value::record({{"source", input}, {"frames", Value::array(std::move(frames))}});
}

} // namespace

ExecutionResult BuiltinExecutor::run(const Code& code, const Value& input, ExecutionMode mode,
                                     CancelToken& cancel) {
    const auto start = Clock::now();
    ExecutionResult r;
    const std::string& fn = code.text;
    const bool debug = mode == ExecutionMode::Debug;
    if (debug) r.log.push_back("DEBUG enter " + fn + " input=" + input.canonical());

    auto arg = [&](std::string_view prefix) -> std::optional<std::string_view> {
        if (fn.size() >= prefix.size() && std::string_view(fn).substr(0, prefix.size()) == prefix) {
            return std::string_view(fn).substr(prefix.size());
        }
        return std::nullopt;
    };

    try {
        if (code.language != "builtin") throw Failure{"not a builtin: " + code.language};
        if (fn == "identity") {
            r.output = input;
        } else if (fn == "uppercase") {
            if (input.type() != ValueType::String) throw Failure{"uppercase expects a string"};
            std::string s = input.as_string();
            for (char& c : s) {
                if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
            }
            r.output = Value::string(std::move(s));
        } else if (fn == "sum") {
            r.output = builtin_sum(input);
        } else if (auto v = arg("const:")) {
            const auto doc = nlohmann::json::parse(*v, nullptr, false);
            r.output = doc.is_discarded() ? Value::string(std::string(*v)) : Value::from_json(doc);
        } else if (auto s = arg("sleep:")) {
            const std::string text(*s);
            char* end = nullptr;
            const double secs = std::strtod(text.c_str(), &end);
            if (text.empty() || *end != '\0' || secs < 0) throw Failure{"bad sleep '" + text + "'"};
            const auto d = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::duration<double>(secs));
            if (cancel.wait_for(d)) {
                r.cancelled = true;
                throw Failure{"cancelled"};
            }
            r.output = input;
        } else if (auto n = arg("label:")) {
            r.output = builtin_label(input, *n);
        } else if (fn == "fetch") {
            r.output = builtin_fetch(input);
        } else {
            throw Failure{"unknown builtin '" + fn + "'"};
        }
    } catch (const Failure& f) {
        r.output.reset();
        r.failure = f.reason;
        r.exit_status = 1;
    } catch (const Error& e) {
        r.output.reset();
        r.failure = e.what();
        r.exit_status = 1;
    }
    if (debug) {
        r.log.push_back("DEBUG exit " + fn + (r.ok() ? " output=" + r.output->canonical()
                                                     : " failure=" + r.failure));
    }
    r.duration = seconds_since(start);
    return r;
}

std::map<std::string, std::vector<std::string>> SubprocessExecutor::default_commands() {
    return {
        {"sh", {"/bin/sh", "{file}"}},
        {"bash", {"bash", "{file}"}},
        {"python", {"python3", "{file}"}},
        {"python3", {"python3", "{file}"}},
    };
}

std::map<std::string, std::vector<std::string>> SubprocessExecutor::default_debug_commands() {
    return {
        {"sh", {"/bin/sh", "-x", "{file}"}},
        {"bash", {"bash", "-x", "{file}"}},
        {"python", {"python3", "-X", "dev", "{file}"}},
        {"python3", {"python3", "-X", "dev", "{file}"}},
    };
}

namespace {

class TempScript {
public:
    explicit TempScript(const std::string& text) {
        std::string pattern = (std::filesystem::temp_directory_path() / "beestar-XXXXXX").string();
        const int fd = ::mkstemp(pattern.data());
        if (fd < 0) throw Error(ErrorCode::ExecutorFailure, std::string("mkstemp: ") + std::strerror(errno));
        path_ = pattern;
        std::size_t off = 0;
        while (off < text.size()) {
            const ssize_t n = ::write(fd, text.data() + off, text.size() - off);
            if (n <= 0) {
                ::close(fd);
                throw Error(ErrorCode::ExecutorFailure, "cannot write script");
            }
            off += static_cast<std::size_t>(n);
        }
        ::close(fd);
    }
    ~TempScript() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

void split_lines(std::string& buffer, std::vector<std::string>& out, bool flush) {
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
        out.push_back(buffer.substr(0, pos));
        buffer.erase(0, pos + 1);
    }
    if (flush && !buffer.empty()) {
        out.push_back(buffer);
        buffer.clear();
    }
}

} // namespace

ExecutionResult SubprocessExecutor::run(const Code& code, const Value& input, ExecutionMode mode,
                                        CancelToken& cancel) {
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { std::signal(SIGPIPE, SIG_IGN); });

    const auto start = Clock::now();
    ExecutionResult r;
    const bool debug = mode == ExecutionMode::Debug;
    const auto& table = debug ? options_.debug_commands : options_.commands;
    const auto it = table.find(code.language);
    if (it == table.end()) {
        r.failure = "no command template for language '" + code.language + "'";
        r.exit_status = 127;
        return r;
    }

    TempScript script(code.text);
    SpawnOptions spawn;
    for (const auto& part : it->second) {
        if (part == "{file}") {
            spawn.argv.push_back(script.path());
        } else if (part == "{entrypoint}") {
            spawn.argv.push_back(code.entrypoint);
        } else {
            spawn.argv.push_back(part);
        }
    }
    spawn.env = options_.env;
    spawn.env["BEESTAR_DEBUG"] = debug ? "1" : "0";

    Process child;
    try {
        child = Process::spawn(spawn);
    } catch (const Error& e) {
        r.failure = e.what();
        r.exit_status = 127;
        return r;
    }

    const std::string payload = input.canonical() + "\n";
    std::size_t written = 0;
    ::fcntl(child.stdin_fd(), F_SETFL, ::fcntl(child.stdin_fd(), F_GETFL) | O_NONBLOCK);
    std::string out, err;
    bool out_open = true, err_open = true;
    std::optional<ExitStatus> status;

    while (out_open || err_open || child.stdin_fd() >= 0) {
        if (cancel.cancelled()) {
            status = child.terminate(options_.grace);
            r.cancelled = true;
            break;
        }
        std::vector<pollfd> fds;
        if (child.stdin_fd() >= 0) fds.push_back({child.stdin_fd(), POLLOUT, 0});
        if (out_open) fds.push_back({child.stdout_fd(), POLLIN, 0});
        if (err_open) fds.push_back({child.stderr_fd(), POLLIN, 0});
        const int ready = ::poll(fds.data(), fds.size(), 20);
        if (ready < 0 && errno != EINTR) break;
        for (const auto& p : fds) {
            if (!p.revents) continue;
            if (p.fd == child.stdin_fd()) {
                const ssize_t n = ::write(p.fd, payload.data() + written, payload.size() - written);
                if (n > 0) written += static_cast<std::size_t>(n);
                if (n < 0 && errno != EAGAIN && errno != EINTR) written = payload.size();
                if (written == payload.size()) child.close_stdin();
                continue;
            }
            char buf[65536];
            const ssize_t n = ::read(p.fd, buf, sizeof buf);
            if (n > 0) {
                (p.fd == child.stdout_fd() ? out : err).append(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
                (p.fd == child.stdout_fd() ? out_open : err_open) = false;
            }
        }
        if (!out_open && !err_open && child.stdin_fd() >= 0) child.close_stdin();
    }

    while (!status) {
        if (cancel.cancelled()) {
            status = child.terminate(options_.grace);
            r.cancelled = true;
            break;
        }
        status = child.wait_for(std::chrono::milliseconds(20));
    }
    split_lines(err, r.log, true);
    r.exit_status = status->shell_code();
    r.duration = seconds_since(start);

    if (r.cancelled) {
        r.failure = "cancelled";
        return r;
    }
    if (!status->success()) {
        r.failure = "exit status " + std::to_string(r.exit_status);
        if (!r.log.empty()) r.failure += ": " + r.log.back();
        return r;
    }
    const auto doc = nlohmann::json::parse(out, nullptr, false);
    if (doc.is_discarded()) {
        r.failure = out.find_first_not_of(" \t\r\n") == std::string::npos
                        ? "no output document on stdout"
                        : "stdout is not a JSON document";
        return r;
    }
    try {
        r.output = Value::from_json(doc);
    } catch (const Error& e) {
        r.failure = std::string("invalid output value: ") + e.what();
    }
    return r;
}

ExecutionResult DispatchingExecutor::run(const Code& code, const Value& input, ExecutionMode mode,
                                         CancelToken& cancel) {
    if (code.language == "builtin") return builtin_.run(code, input, mode, cancel);
    return subprocess_.run(code, input, mode, cancel);
}

} // namespace beestar
