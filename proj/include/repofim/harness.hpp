#pragma once

// Execution harness: stitch a generated middle back into the file, write a
// fresh copy of the snapshot into a private temp directory, run the repo's
// test command with a scrubbed environment, and classify the outcome. The
// whole process group is killed at the wall-clock limit.
//
// Isolation is scrub-and-copy, not a container; run untrusted repositories
// inside a container of your own.

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "repofim/ingest.hpp"
#include "repofim/mask.hpp"
#include "repofim/metrics.hpp"
#include "repofim/util.hpp"

namespace repofim {

struct SandboxSpec {
    double timeout_seconds = 120.0;
    std::string test_command; // falls back to the snapshot's command if empty
    std::vector<std::string> env_allowlist = {"PATH", "HOME", "LANG",
                                              "LC_ALL", "TMPDIR", "TERM"};
    size_t max_output_capture_bytes = 64 * 1024; // per stream
    bool keep_workdir = false;
    std::filesystem::path workdir_root; // defaults to the system temp dir
};

struct ExecOutcome {
    std::string task_id;
    OutcomeStatus status = OutcomeStatus::HarnessError;
    std::optional<int> exit_code;
    double duration_seconds = 0.0;
    std::string stdout_tail;
    std::string stderr_tail;
    std::string detail; // harness/generation error message
};

// prefix ++ generated ++ suffix, byte for byte.
inline std::string stitch(const MaskTask& task, std::string_view generated_middle) {
    std::string out;
    out.reserve(task.prefix.size() + generated_middle.size() + task.suffix.size());
    out += task.prefix;
    out += generated_middle;
    out += task.suffix;
    return out;
}

namespace detail {

inline std::string read_tail(const std::filesystem::path& p, size_t max_bytes) {
    auto bytes = read_file_bytes(p);
    if (!bytes) return {};
    if (bytes->size() <= max_bytes) return *bytes;
    return bytes->substr(bytes->size() - max_bytes);
}

inline std::filesystem::path make_workdir(const SandboxSpec& spec, std::string_view task_id) {
    namespace fs = std::filesystem;
    fs::path root = spec.workdir_root.empty() ? fs::temp_directory_path() : spec.workdir_root;
    static std::atomic<uint64_t> counter{0};
    uint64_t unique = hash_combine(static_cast<uint64_t>(::getpid()),
                                   counter.fetch_add(1) + 0x9e37u);
    fs::path dir = root / ("repofim-" + std::string(task_id) + "-" + to_hex16(unique));
    fs::create_directories(dir);
    return dir;
}

struct SpawnResult {
    bool spawned = false;
    int exit_code = -1;
    bool timed_out = false;
    double duration_seconds = 0.0;
    std::string error;
};

inline SpawnResult run_command(const std::string& command, const std::filesystem::path& cwd,
                               const SandboxSpec& spec, const std::filesystem::path& stdout_path,
                               const std::filesystem::path& stderr_path) {
    SpawnResult result;

    // Scrubbed environment: allowlisted variables only.
    std::vector<std::string> env_storage;
    for (const auto& name : spec.env_allowlist) {
        const char* v = ::getenv(name.c_str());
        if (v) env_storage.push_back(name + "=" + v);
    }
    std::vector<char*> envp;
    envp.reserve(env_storage.size() + 1);
    for (auto& kv : env_storage) envp.push_back(kv.data());
    envp.push_back(nullptr);

    int out_fd = ::open(stdout_path.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
    int err_fd = ::open(stderr_path.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
    if (out_fd < 0 || err_fd < 0) {
        if (out_fd >= 0) ::close(out_fd);
        if (err_fd >= 0) ::close(err_fd);
        result.error = "cannot open capture files";
        return result;
    }

    auto start = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(out_fd);
        ::close(err_fd);
        result.error = "fork failed";
        return result;
    }
    if (pid == 0) {
        ::setpgid(0, 0); // own process group so the whole tree can be killed
        if (::chdir(cwd.c_str()) != 0) ::_exit(127);
        ::dup2(out_fd, STDOUT_FILENO);
        ::dup2(err_fd, STDERR_FILENO);
        ::close(out_fd);
        ::close(err_fd);
        const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
        ::execve("/bin/sh", const_cast<char* const*>(argv), envp.data());
        ::_exit(127);
    }
    ::close(out_fd);
    ::close(err_fd);
    ::setpgid(pid, pid); // also from the parent side, so the kill never races
    result.spawned = true;

    const auto deadline =
        start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(spec.timeout_seconds));
    int status = 0;
    while (true) {
        pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0 && errno != EINTR) {
            result.error = "waitpid failed";
            break;
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            result.timed_out = true;
            ::kill(-pid, SIGKILL); // the whole group, including test workers
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    result.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (result.timed_out && result.duration_seconds < spec.timeout_seconds)
        result.duration_seconds = spec.timeout_seconds;
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    return result;
}

} // namespace detail

// Write every snapshot file below `dir`, with `override_path` (when present)
// replaced by `override_content`.
inline void materialize_snapshot(const RepoSnapshot& snapshot, const std::filesystem::path& dir,
                                 std::string_view override_path = {},
                                 std::string_view override_content = {}) {
    for (const auto& f : snapshot.files) {
        if (!override_path.empty() && f.path == override_path)
            write_file(dir / f.path, override_content);
        else
            write_file(dir / f.path, f.content);
    }
}

inline ExecOutcome run_tests(const RepoSnapshot& snapshot, const MaskTask& task,
                             std::string_view full_file, const SandboxSpec& spec) {
    namespace fs = std::filesystem;
    ExecOutcome outcome;
    outcome.task_id = task.task_id;

    std::string command = spec.test_command.empty() ? snapshot.test_command : spec.test_command;
    if (command.empty()) {
        outcome.detail = "no test command for repo " + snapshot.repo_id;
        return outcome;
    }
    if (!snapshot.find(task.file_path)) {
        outcome.detail = "task file not in snapshot: " + task.file_path;
        return outcome;
    }

    fs::path workdir;
    try {
        workdir = detail::make_workdir(spec, task.task_id);
        materialize_snapshot(snapshot, workdir, task.file_path, full_file);
    } catch (const std::exception& e) {
        outcome.detail = std::string("materialization failed: ") + e.what();
        return outcome;
    }

    auto stdout_path = workdir / ".repofim-stdout";
    auto stderr_path = workdir / ".repofim-stderr";
    auto spawned = detail::run_command(command, workdir, spec, stdout_path, stderr_path);

    outcome.duration_seconds = spawned.duration_seconds;
    outcome.stdout_tail = detail::read_tail(stdout_path, spec.max_output_capture_bytes);
    outcome.stderr_tail = detail::read_tail(stderr_path, spec.max_output_capture_bytes);

    if (!spawned.spawned) {
        outcome.status = OutcomeStatus::HarnessError;
        outcome.detail = spawned.error;
    } else if (spawned.timed_out) {
        outcome.status = OutcomeStatus::Timeout;
    } else {
        outcome.exit_code = spawned.exit_code;
        outcome.status = spawned.exit_code == 0 ? OutcomeStatus::Pass : OutcomeStatus::Fail;
    }

    if (!spec.keep_workdir) {
        std::error_code ec;
        fs::remove_all(workdir, ec); // best effort
    }
    return outcome;
}

// Evaluate many (task, middle) pairs on a bounded worker pool. Results come
// back in input order; each worker owns its temp directory.
struct EvalJob {
    const RepoSnapshot* snapshot = nullptr;
    const MaskTask* task = nullptr;
    std::string middle;
    bool generation_failed = false;
    std::string generation_error;
};

inline std::vector<ExecOutcome> run_eval_jobs(const std::vector<EvalJob>& jobs,
                                              const SandboxSpec& spec, size_t workers) {
    std::vector<ExecOutcome> outcomes(jobs.size());
    if (jobs.empty()) return outcomes;
    workers = std::max<size_t>(1, std::min(workers, jobs.size()));
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                const auto& job = jobs[i];
                if (job.generation_failed) {
                    outcomes[i].task_id = job.task->task_id;
                    outcomes[i].status = OutcomeStatus::GenerationError;
                    outcomes[i].detail = job.generation_error;
                    continue;
                }
                try {
                    outcomes[i] =
                        run_tests(*job.snapshot, *job.task, stitch(*job.task, job.middle), spec);
                } catch (const std::exception& e) {
                    outcomes[i].task_id = job.task->task_id;
                    outcomes[i].status = OutcomeStatus::HarnessError;
                    outcomes[i].detail = e.what();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    return outcomes;
}

} // namespace repofim
