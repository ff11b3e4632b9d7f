#pragma once

#include <csignal>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace testing {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

/// Runs the CLI with the given arguments, capturing stdout and stderr together.
inline RunResult run_cli(const std::vector<std::string>& args) {
    std::string cmd = shell_quote(TRATING_CLI_PATH);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " 2>&1";
    RunResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) throw std::runtime_error("popen failed");
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
    int status = pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

/// A CLI child process whose stdout is read line by line.
class Child {
public:
    explicit Child(const std::vector<std::string>& args) {
        int fds[2];
        if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
        posix_spawn_file_actions_t fa;
        posix_spawn_file_actions_init(&fa);
        posix_spawn_file_actions_adddup2(&fa, fds[1], STDOUT_FILENO);
        posix_spawn_file_actions_addclose(&fa, fds[0]);
        posix_spawn_file_actions_addclose(&fa, fds[1]);
        std::vector<std::string> argv_s = {TRATING_CLI_PATH};
        argv_s.insert(argv_s.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& a : argv_s) argv.push_back(a.data());
        argv.push_back(nullptr);
        int rc = posix_spawn(&pid_, argv[0], &fa, nullptr, argv.data(), environ);
        posix_spawn_file_actions_destroy(&fa);
        close(fds[1]);
        if (rc != 0) {
            close(fds[0]);
            throw std::runtime_error("posix_spawn failed");
        }
        out_ = fdopen(fds[0], "r");
    }
    ~Child() {
        if (pid_ > 0 && !reaped_) {
            kill(pid_, SIGKILL);
            wait();
        }
        if (out_) fclose(out_);
    }
    Child(const Child&) = delete;
    Child& operator=(const Child&) = delete;

    /// Next stdout line without its newline; empty at end of stream.
    std::string read_line() {
        std::string line;
        int c;
        while ((c = fgetc(out_)) != EOF && c != '\n') line += static_cast<char>(c);
        return line;
    }

    /// Reads until a line starting with "listening on " and returns the URL.
    std::string wait_for_url() {
        for (std::string line = read_line(); !line.empty() || !feof(out_); line = read_line()) {
            if (line.rfind("listening on ", 0) == 0) return line.substr(13);
        }
        return {};
    }

    void signal(int sig) { kill(pid_, sig); }

    /// Exit code, or 128 + signal.
    int wait() {
        int status = 0;
        waitpid(pid_, &status, 0);
        reaped_ = true;
        return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    }

private:
    pid_t pid_ = -1;
    bool reaped_ = false;
    FILE* out_ = nullptr;
};

}  // namespace testing
