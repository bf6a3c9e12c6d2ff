#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "htg/errors.hpp"
#include "htg/evaluator.hpp"

namespace htg {

using nlohmann::json;

SubprocessEvaluator::SubprocessEvaluator(SubprocessEvaluatorConfig config) : config_(std::move(config)) {
    if (config_.command.empty()) throw ConfigError("subprocess evaluator needs a command");
    // A dead worker must surface as a transport error, not kill the caller.
    ::signal(SIGPIPE, SIG_IGN);
}

SubprocessEvaluator::~SubprocessEvaluator() { stop(); }

void SubprocessEvaluator::start() {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0) throw TransportError(TransportKind::Network, "pipe() failed");
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw TransportError(TransportKind::Network, "pipe() failed");
    }
    std::vector<char*> argv;
    for (auto& a : config_.command) argv.push_back(a.data());
    argv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError(TransportKind::Network, "fork() failed");
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::execvp(argv[0], argv.data());
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    buffer_.clear();
}

void SubprocessEvaluator::stop() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
    }
    pid_ = -1;
    buffer_.clear();
}

std::string SubprocessEvaluator::read_line(std::chrono::milliseconds budget) {
    const auto deadline = std::chrono::steady_clock::now() + budget;
    while (true) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw TransportError(TransportKind::Timeout, "evaluator worker did not reply in time");
        pollfd pfd{from_child_, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw TransportError(TransportKind::Network, std::string("poll failed: ") + std::strerror(errno));
        }
        if (rc == 0) continue;
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(TransportKind::Network, std::string("read failed: ") + std::strerror(errno));
        }
        if (n == 0) throw TransportError(TransportKind::Network, "evaluator worker exited");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

EvaluationFeedback SubprocessEvaluator::evaluate(const std::string& task_id, const std::string& source) {
    if (pid_ < 0) start();
    const json request{{"task_id", task_id},
                       {"candidate_source", source},
                       {"timeout_ms", config_.timeout.count()}};
    const std::string line = request.dump() + "\n";
    try {
        std::size_t written = 0;
        while (written < line.size()) {
            const ssize_t n = ::write(to_child_, line.data() + written, line.size() - written);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(TransportKind::Network, "evaluator worker is not accepting requests");
            }
            written += static_cast<std::size_t>(n);
        }
        const std::string reply = read_line(config_.timeout + config_.grace);
        json doc = json::parse(reply, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw TransportError(TransportKind::Protocol, "evaluator reply is not a JSON object");
        }
        try {
            return feedback_from_json(doc);
        } catch (const ParseError& err) {
            throw TransportError(TransportKind::Protocol, std::string("malformed evaluator reply: ") + err.what());
        }
    } catch (const TransportError&) {
        // The stream position is unknown after a failure; start fresh next time.
        stop();
        throw;
    }
}

}  // namespace htg
