#include "sempref/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sempref/detail/sha256.hpp"
#include "sempref/errors.hpp"
#include "jsonl_util.hpp"

namespace sempref {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

// ─── command template ─────────────────────────────────────────────

std::vector<std::string> split_template(const std::string& tmpl) {
    std::vector<std::string> tokens;
    std::istringstream in(tmpl);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

std::vector<std::string> resolve_command(const std::vector<std::string>& tokens,
                                         const std::string& src_path) {
    std::vector<std::string> argv = tokens;
    for (std::string& tok : argv) {
        std::size_t at;
        while ((at = tok.find("{src}")) != std::string::npos) tok.replace(at, 5, src_path);
    }
    return argv;
}

// ─── temp files ────────────────────────────────────────────────────

struct TempDir {
    fs::path path;

    TempDir() {
        std::string templ = (fs::temp_directory_path() / "sempref-run-XXXXXX").string();
        if (!::mkdtemp(templ.data())) throw StageError("mkdtemp failed: " + std::string(std::strerror(errno)));
        path = templ;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw StageError("cannot write temp file '" + p.string() + "'");
    out << content;
    if (!out.flush()) throw StageError("short write to '" + p.string() + "'");
}

// ─── process execution ─────────────────────────────────────────────

struct RawResult {
    enum class Status { Exited, Signaled, TimedOut, Overflow, SpawnFailed };
    Status status = Status::SpawnFailed;
    int exit_code = -1;
    std::string stdout_data;
};

void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

// Kills the child's whole process group and reaps the child.
void kill_and_reap(pid_t pid) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
}

RawResult run_process(const std::vector<std::string>& argv, const std::string& stdin_payload,
                      std::chrono::milliseconds timeout, std::uint64_t max_output_bytes) {
    RawResult result;

    int in_pipe[2];  // parent writes -> child stdin
    int out_pipe[2]; // child stdout -> parent reads
    if (::pipe(in_pipe) != 0) return result;
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        return result;
    }

    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        return result;
    }

    if (pid == 0) {
        // Child: own process group so the whole tree can be killed at once.
        ::setpgid(0, 0);
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        int devnull = ::open("/dev/null", O_WRONLY);
        if (devnull >= 0) ::dup2(devnull, STDERR_FILENO);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], devnull})
            if (fd >= 0) ::close(fd);

        std::vector<char*> c_argv;
        c_argv.reserve(argv.size() + 1);
        for (const std::string& a : argv) c_argv.push_back(const_cast<char*>(a.c_str()));
        c_argv.push_back(nullptr);
        ::execvp(c_argv[0], c_argv.data());
        ::_exit(127);
    }

    int write_fd = in_pipe[1];
    int read_fd = out_pipe[0];
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    set_nonblocking(write_fd);
    set_nonblocking(read_fd);

    const auto deadline = Clock::now() + timeout;
    std::size_t written = 0;
    bool overflow = false;
    char buf[65536];

    if (stdin_payload.empty()) close_fd(write_fd);

    // Interleave stdin writes with stdout reads; a one-sided loop can
    // deadlock once either pipe fills up.
    while (read_fd >= 0) {
        const auto now = Clock::now();
        if (now >= deadline) break;
        const auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();

        struct pollfd fds[2];
        nfds_t nfds = 0;
        int read_slot = -1, write_slot = -1;
        if (read_fd >= 0) {
            read_slot = static_cast<int>(nfds);
            fds[nfds++] = {read_fd, POLLIN, 0};
        }
        if (write_fd >= 0) {
            write_slot = static_cast<int>(nfds);
            fds[nfds++] = {write_fd, POLLOUT, 0};
        }

        int rc = ::poll(fds, nfds, static_cast<int>(std::min<long long>(remaining, 1000)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (rc == 0) continue;

        if (write_slot >= 0 && (fds[write_slot].revents & (POLLOUT | POLLERR | POLLHUP))) {
            ssize_t n = ::write(write_fd, stdin_payload.data() + written,
                                stdin_payload.size() - written);
            if (n > 0) {
                written += static_cast<std::size_t>(n);
                if (written == stdin_payload.size()) close_fd(write_fd);
            } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
                // EPIPE: candidate exited without reading its input. Fine.
                close_fd(write_fd);
            }
        }

        if (read_slot >= 0 && (fds[read_slot].revents & (POLLIN | POLLERR | POLLHUP))) {
            ssize_t n = ::read(read_fd, buf, sizeof buf);
            if (n > 0) {
                result.stdout_data.append(buf, static_cast<std::size_t>(n));
                if (result.stdout_data.size() > max_output_bytes) {
                    overflow = true;
                    break;
                }
            } else if (n == 0) {
                close_fd(read_fd); // EOF
            } else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
                close_fd(read_fd);
            }
        }
    }

    close_fd(write_fd);

    if (overflow) {
        close_fd(read_fd);
        kill_and_reap(pid);
        result.status = RawResult::Status::Overflow;
        return result;
    }

    if (read_fd >= 0) {
        // Deadline hit with the pipe still open.
        close_fd(read_fd);
        kill_and_reap(pid);
        result.status = RawResult::Status::TimedOut;
        return result;
    }

    // Output is complete; wait for exit, still bounded by the deadline
    // (a child may close stdout and then hang).
    int status = 0;
    for (;;) {
        pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0 && errno != EINTR) {
            kill_and_reap(pid);
            result.status = RawResult::Status::SpawnFailed;
            return result;
        }
        if (Clock::now() >= deadline) {
            kill_and_reap(pid);
            result.status = RawResult::Status::TimedOut;
            return result;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    // Reap any stragglers in the group (grandchildren keep running
    // otherwise).
    ::kill(-pid, SIGKILL);

    if (WIFEXITED(status)) {
        result.status = RawResult::Status::Exited;
        result.exit_code = WEXITSTATUS(status);
    } else {
        result.status = RawResult::Status::Signaled;
    }
    return result;
}

Outcome outcome_from_raw(const RawResult& raw) {
    switch (raw.status) {
        case RawResult::Status::Exited:
            if (raw.exit_code == 0) return Outcome::output_of(normalize_output(raw.stdout_data));
            return Outcome::crash();
        case RawResult::Status::TimedOut:
            return Outcome::timeout();
        case RawResult::Status::Signaled:
        case RawResult::Status::Overflow:
        case RawResult::Status::SpawnFailed:
            return Outcome::crash();
    }
    return Outcome::crash();
}

// ─── outcome cache ─────────────────────────────────────────────────

std::string cache_key(const std::string& source, const std::string& input,
                      const ExecutorConfig& config) {
    detail::Sha256 h;
    auto feed = [&h](std::string_view part) {
        std::uint64_t len = part.size();
        char len_bytes[8];
        for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<char>(len >> (i * 8));
        h.update(len_bytes, 8);
        h.update(part);
    };
    feed("sempref-outcome-v1");
    feed(detail::sha256_hex(source));
    feed(detail::sha256_hex(input));
    feed(config.command_template);
    feed(std::to_string(config.timeout.count()));
    return h.hex_digest();
}

class OutcomeCache {
public:
    explicit OutcomeCache(fs::path dir) : dir_(std::move(dir)) {
        if (!dir_.empty()) fs::create_directories(dir_);
    }

    bool enabled() const { return !dir_.empty(); }

    bool lookup(const std::string& key, Outcome& out, bool& corrupt) const {
        corrupt = false;
        if (!enabled()) return false;
        std::ifstream in(dir_ / key, std::ios::binary);
        if (!in) return false;
        std::string line;
        std::getline(in, line);
        auto j = nlohmann::ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            corrupt = true;
            return false;
        }
        try {
            out = jsonl_util::outcome_from_json(j, dir_ / key, 1);
        } catch (const ValidationError&) {
            corrupt = true;
            return false;
        }
        return true;
    }

    void store(const std::string& key, const Outcome& outcome) {
        if (!enabled()) return;
        const fs::path final_path = dir_ / key;
        const fs::path tmp_path =
            dir_ / (key + ".tmp." + std::to_string(::getpid()) + "." +
                    std::to_string(counter_.fetch_add(1)));
        {
            std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
            if (!out) return; // cache is best-effort
            out << jsonl_util::outcome_to_json(outcome).dump() << '\n';
        }
        std::error_code ec;
        fs::rename(tmp_path, final_path, ec);
        if (ec) fs::remove(tmp_path, ec);
    }

private:
    fs::path dir_;
    mutable std::atomic<std::uint64_t> counter_{0};
};

struct AtomicStats {
    std::atomic<std::uint64_t> launches{0};
    std::atomic<std::uint64_t> cache_hits{0};
    std::atomic<std::uint64_t> cache_repairs{0};

    ExecStats snapshot() const { return {launches.load(), cache_hits.load(), cache_repairs.load()}; }
};

ExecutionTrace run_candidate(const Candidate& candidate, const ProblemInputs& problem,
                             const ExecutorConfig& config,
                             const std::vector<std::string>& template_tokens,
                             OutcomeCache& cache, const fs::path& scratch_dir,
                             AtomicStats& stats) {
    ExecutionTrace trace;
    trace.candidate_id = candidate.id;
    trace.problem_id = problem.id;
    trace.outcomes.reserve(problem.test_inputs.size());

    const fs::path src_path =
        scratch_dir / ("cand-" + detail::sha256_hex(candidate.problem_id + "\x1f" + candidate.id)
                                     .substr(0, 16) + ".src");
    bool src_written = false;

    for (const std::string& input : problem.test_inputs) {
        const std::string key = cache.enabled() ? cache_key(candidate.source, input, config) : "";
        Outcome outcome;
        bool corrupt = false;
        if (cache.enabled() && cache.lookup(key, outcome, corrupt)) {
            stats.cache_hits.fetch_add(1);
            trace.outcomes.push_back(std::move(outcome));
            continue;
        }
        if (corrupt) stats.cache_repairs.fetch_add(1);

        if (!src_written) {
            write_file(src_path, candidate.source);
            src_written = true;
        }
        const auto argv = resolve_command(template_tokens, src_path.string());
        stats.launches.fetch_add(1);
        outcome = outcome_from_raw(
            run_process(argv, input, config.timeout, config.max_output_bytes));
        if (cache.enabled()) cache.store(key, outcome);
        trace.outcomes.push_back(std::move(outcome));
    }
    return trace;
}

} // namespace

void ExecutorConfig::validate() const {
    if (command_template.find("{src}") == std::string::npos)
        throw ConfigError("command_template must contain the {src} placeholder: '" +
                          command_template + "'");
    const auto tokens = split_template(command_template);
    if (tokens.empty()) throw ConfigError("command_template is empty");
    if (timeout.count() <= 0) throw ConfigError("executor timeout must be positive");
    if (workers < 1) throw ConfigError("executor workers must be >= 1");
    if (max_output_bytes < 1) throw ConfigError("max_output_bytes must be >= 1");

    // Resolve the interpreter up front so a bad template aborts the run
    // instead of turning every execution into a Crash.
    const std::string& prog = tokens.front();
    if (prog.find("{src}") != std::string::npos) return; // the source file itself
    if (prog.find('/') != std::string::npos) {
        if (::access(prog.c_str(), X_OK) != 0)
            throw ConfigError("command not executable: '" + prog + "'");
        return;
    }
    const char* path_env = ::getenv("PATH");
    std::string path = path_env ? path_env : "";
    std::size_t start = 0;
    while (start <= path.size()) {
        std::size_t colon = path.find(':', start);
        if (colon == std::string::npos) colon = path.size();
        const std::string dir = path.substr(start, colon - start);
        if (!dir.empty() && ::access((dir + "/" + prog).c_str(), X_OK) == 0) return;
        start = colon + 1;
    }
    throw ConfigError("command not found in PATH: '" + prog + "'");
}

std::string normalize_output(std::string_view raw) {
    static constexpr char kStrip[] = " \t\r\v\f";
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const std::size_t nl = raw.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(raw.substr(pos));
            break;
        }
        lines.push_back(raw.substr(pos, nl - pos));
        pos = nl + 1;
    }
    for (std::string_view& line : lines) {
        const std::size_t end = line.find_last_not_of(kStrip);
        line = (end == std::string_view::npos) ? std::string_view{} : line.substr(0, end + 1);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();

    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out.push_back('\n');
        out.append(lines[i]);
    }
    return out;
}

bool is_crashed(const ExecutionTrace& trace) {
    return std::none_of(trace.outcomes.begin(), trace.outcomes.end(),
                        [](const Outcome& o) { return o.is_output(); });
}

ExecutionTrace execute_candidate(const Candidate& candidate, const ProblemInputs& problem,
                                 const ExecutorConfig& config, ExecStats* stats) {
    config.validate();
    if (candidate.problem_id != problem.id)
        throw ValidationError("candidate '" + candidate.id + "' does not belong to problem '" +
                              problem.id + "'");
    ignore_sigpipe_once();
    OutcomeCache cache(config.cache_dir);
    TempDir scratch;
    AtomicStats local;
    ExecutionTrace trace = run_candidate(candidate, problem, config,
                                         split_template(config.command_template), cache,
                                         scratch.path, local);
    if (stats) *stats += local.snapshot();
    return trace;
}

BatchResult execute_all(std::span<const ProblemInputs> problems,
                        std::span<const Candidate> candidates, const ExecutorConfig& config) {
    config.validate();
    ignore_sigpipe_once();

    std::unordered_map<std::string_view, const ProblemInputs*> by_id;
    by_id.reserve(problems.size());
    for (const ProblemInputs& p : problems) by_id.emplace(p.id, &p);
    for (const Candidate& c : candidates) {
        if (!by_id.count(c.problem_id))
            throw ValidationError("dangling reference: candidate '" + c.id +
                                  "' names unknown problem '" + c.problem_id + "'");
    }

    OutcomeCache cache(config.cache_dir);
    TempDir scratch;
    AtomicStats stats;
    const auto template_tokens = split_template(config.command_template);

    BatchResult result;
    result.traces.resize(candidates.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= candidates.size()) return;
            const Candidate& c = candidates[i];
            result.traces[i] = run_candidate(c, *by_id.at(c.problem_id), config,
                                             template_tokens, cache, scratch.path, stats);
        }
    };

    const int n_workers = std::min<int>(config.workers, std::max<std::size_t>(candidates.size(), 1));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    std::sort(result.traces.begin(), result.traces.end(),
              [](const ExecutionTrace& a, const ExecutionTrace& b) {
                  return std::tie(a.problem_id, a.candidate_id) <
                         std::tie(b.problem_id, b.candidate_id);
              });
    result.stats = stats.snapshot();
    return result;
}

} // namespace sempref
