#include "misi/csv.hpp"
#include "misi/error.hpp"
#include "misi/models.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace misi {

namespace {

constexpr std::size_t kStderrTail = 2000;

// Writes to a pipe whose reader has exited must fail with EPIPE, not kill us.
void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

struct Pipe {
    int fd[2] = {-1, -1};
    Pipe() {
        if (::pipe2(fd, O_CLOEXEC) != 0) throw ModelFailure(std::string("pipe: ") + std::strerror(errno));
    }
    ~Pipe() { close_all(); }
    void close_end(int i) {
        if (fd[i] >= 0) ::close(fd[i]);
        fd[i] = -1;
    }
    void close_all() {
        close_end(0);
        close_end(1);
    }
};

struct ChildResult {
    std::string out;
    std::string err;
    int status = 0;
};

ChildResult run_child(const std::string& command, const std::string& input, std::uint64_t seed,
                      std::chrono::milliseconds timeout) {
    ignore_sigpipe();

    // Everything the child needs is built before fork.
    std::vector<std::string> env_storage;
    for (char** e = environ; e && *e; ++e)
        if (std::strncmp(*e, "MISI_MODEL_SEED=", 16) != 0) env_storage.emplace_back(*e);
    env_storage.push_back("MISI_MODEL_SEED=" + std::to_string(seed));
    std::vector<char*> envp;
    for (auto& s : env_storage) envp.push_back(s.data());
    envp.push_back(nullptr);
    std::string sh = "/bin/sh", flag = "-c", cmd = command;
    char* argv[] = {sh.data(), flag.data(), cmd.data(), nullptr};

    Pipe in, out, err;
    const pid_t pid = ::fork();
    if (pid < 0) throw ModelFailure(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::dup2(in.fd[0], STDIN_FILENO);
        ::dup2(out.fd[1], STDOUT_FILENO);
        ::dup2(err.fd[1], STDERR_FILENO);
        ::execve(argv[0], argv, envp.data());
        ::_exit(127);
    }
    in.close_end(0);
    out.close_end(1);
    err.close_end(1);
    for (int fd : {in.fd[1], out.fd[0], err.fd[0]}) ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);

    ChildResult res;
    std::size_t written = 0;
    if (input.empty()) in.close_end(1);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    char buf[65536];
    bool timed_out = false;
    while (out.fd[0] >= 0 || err.fd[0] >= 0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            timed_out = true;
            break;
        }
        pollfd fds[3];
        int n = 0;
        int idx_in = -1, idx_out = -1, idx_err = -1;
        if (in.fd[1] >= 0) {
            idx_in = n;
            fds[n++] = {in.fd[1], POLLOUT, 0};
        }
        if (out.fd[0] >= 0) {
            idx_out = n;
            fds[n++] = {out.fd[0], POLLIN, 0};
        }
        if (err.fd[0] >= 0) {
            idx_err = n;
            fds[n++] = {err.fd[0], POLLIN, 0};
        }
        const int rc = ::poll(fds, static_cast<nfds_t>(n), static_cast<int>(std::min<long long>(left.count(), 1000)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            throw ModelFailure(std::string("poll: ") + std::strerror(errno));
        }
        if (idx_in >= 0 && fds[idx_in].revents) {
            const ssize_t w = ::write(in.fd[1], input.data() + written, input.size() - written);
            if (w > 0) written += static_cast<std::size_t>(w);
            if ((w < 0 && errno != EAGAIN && errno != EINTR) || written == input.size()) in.close_end(1);
        }
        const auto drain = [&](Pipe& p, std::string& sink, int idx) {
            if (idx < 0 || !fds[idx].revents) return;
            const ssize_t r = ::read(p.fd[0], buf, sizeof buf);
            if (r > 0)
                sink.append(buf, static_cast<std::size_t>(r));
            else if (r == 0 || (errno != EAGAIN && errno != EINTR))
                p.close_end(0);
        };
        drain(out, res.out, idx_out);
        drain(err, res.err, idx_err);
    }
    if (timed_out) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, nullptr, 0);
        throw ModelFailure("external model timed out after " + std::to_string(timeout.count()) + " ms");
    }
    in.close_end(1);
    while (::waitpid(pid, &res.status, 0) < 0)
        if (errno != EINTR) throw ModelFailure(std::string("waitpid: ") + std::strerror(errno));
    return res;
}

std::string tail(const std::string& s) {
    return s.size() <= kStderrTail ? s : s.substr(s.size() - kStderrTail);
}

class ExternalModel final : public Model {
public:
    explicit ExternalModel(ExternalModelConfig config)
        : Model(config.inputs, config.outputs), config_(std::move(config)) {
        if (config_.command.empty()) throw InvalidArgument("external model needs a command");
        if (config_.timeout.count() <= 0) throw InvalidArgument("timeout must be positive");
    }

    IoDataset query(const IoDataset& inputs, std::uint64_t seed) const override {
        csv::Table table;
        for (const auto& l : input_labels()) {
            const auto v = inputs.column(l).values();
            table.header.push_back(l);
            table.columns.emplace_back(v.begin(), v.end());
        }
        std::ostringstream os;
        csv::write(os, table);

        ChildResult res;
        {
            std::lock_guard lock(mutex_);
            res = run_child(config_.command, os.str(), seed, config_.timeout);
        }
        if (!WIFEXITED(res.status) || WEXITSTATUS(res.status) != 0) {
            const std::string how = WIFEXITED(res.status)
                                        ? "exited with status " + std::to_string(WEXITSTATUS(res.status))
                                        : "was killed by signal " + std::to_string(WTERMSIG(res.status));
            throw ModelFailure("external model " + how + (res.err.empty() ? "" : ": " + tail(res.err)));
        }

        csv::Table parsed;
        try {
            std::istringstream is(res.out);
            parsed = csv::read(is);
        } catch (const IoError& e) {
            throw ModelFailure(std::string("malformed CSV from external model: ") + e.what());
        }
        if (parsed.rows() != inputs.rows())
            throw ModelFailure("external model returned " + std::to_string(parsed.rows()) + " rows for " +
                               std::to_string(inputs.rows()) + " inputs");
        IoDataset out;
        for (const auto& l : output_labels()) {
            const auto it = std::find(parsed.header.begin(), parsed.header.end(), l);
            if (it == parsed.header.end()) throw ModelFailure("external model output lacks column '" + l + "'");
            auto& col = parsed.columns[static_cast<std::size_t>(it - parsed.header.begin())];
            try {
                out.add(SampleColumn(l, std::move(col)), Role::qoi);
            } catch (const Error& e) {
                throw ModelFailure(std::string("external model output column '") + l + "': " + e.what());
            }
        }
        if (parsed.header.size() != output_labels().size())
            throw ModelFailure("external model emitted " + std::to_string(parsed.header.size()) +
                               " columns, expected " + std::to_string(output_labels().size()));
        return out;
    }

private:
    ExternalModelConfig config_;
    mutable std::mutex mutex_;
};

}  // namespace

ModelHandle external_model(const ExternalModelConfig& config) { return std::make_shared<ExternalModel>(config); }

}  // namespace misi
