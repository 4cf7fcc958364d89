#include "flor/subprocess.hpp"

#include "flor/error.hpp"
#include "flor/util.hpp"

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace flor::util {

namespace {

struct Pipe {
    int rd = -1, wr = -1;
    Pipe() {
        int fds[2];
        if (::pipe(fds) != 0) fail("pipe() failed");
        rd = fds[0];
        wr = fds[1];
    }
    ~Pipe() {
        if (rd >= 0) ::close(rd);
        if (wr >= 0) ::close(wr);
    }
};

}  // namespace

ProcResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                       const std::map<std::string, std::string>& env,
                       const std::string& stdin_data) {
    if (argv.empty()) fail("run_process: empty argv");
    Pipe out_pipe, err_pipe, in_pipe;

    double t0 = now_seconds();
    pid_t pid = ::fork();
    if (pid < 0) fail("fork() failed");
    if (pid == 0) {
        ::dup2(in_pipe.rd, STDIN_FILENO);
        ::dup2(out_pipe.wr, STDOUT_FILENO);
        ::dup2(err_pipe.wr, STDERR_FILENO);
        ::close(in_pipe.rd);
        ::close(in_pipe.wr);
        ::close(out_pipe.rd);
        ::close(out_pipe.wr);
        ::close(err_pipe.rd);
        ::close(err_pipe.wr);
        if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) ::_exit(126);
        for (const auto& [k, v] : env) ::setenv(k.c_str(), v.c_str(), 1);
        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        ::execvp(cargv[0], cargv.data());
        ::_exit(127);
    }

    ::close(in_pipe.rd);
    in_pipe.rd = -1;
    ::close(out_pipe.wr);
    out_pipe.wr = -1;
    ::close(err_pipe.wr);
    err_pipe.wr = -1;

    if (!stdin_data.empty()) {
        size_t off = 0;
        while (off < stdin_data.size()) {
            ssize_t n = ::write(in_pipe.wr, stdin_data.data() + off, stdin_data.size() - off);
            if (n <= 0) break;
            off += static_cast<size_t>(n);
        }
    }
    ::close(in_pipe.wr);
    in_pipe.wr = -1;

    ProcResult res;
    struct pollfd fds[2] = {{out_pipe.rd, POLLIN, 0}, {err_pipe.rd, POLLIN, 0}};
    bool open_out = true, open_err = true;
    char buf[4096];
    while (open_out || open_err) {
        fds[0].fd = open_out ? out_pipe.rd : -1;
        fds[1].fd = open_err ? err_pipe.rd : -1;
        if (::poll(fds, 2, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (open_out && (fds[0].revents & (POLLIN | POLLHUP))) {
            ssize_t n = ::read(out_pipe.rd, buf, sizeof(buf));
            if (n > 0)
                res.out.append(buf, static_cast<size_t>(n));
            else
                open_out = false;
        }
        if (open_err && (fds[1].revents & (POLLIN | POLLHUP))) {
            ssize_t n = ::read(err_pipe.rd, buf, sizeof(buf));
            if (n > 0)
                res.err.append(buf, static_cast<size_t>(n));
            else
                open_err = false;
        }
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    res.seconds = now_seconds() - t0;
    if (WIFEXITED(status))
        res.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        res.exit_code = 128 + WTERMSIG(status);
    return res;
}

std::string run_checked(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                        const std::map<std::string, std::string>& env) {
    auto res = run_process(argv, cwd, env);
    if (res.exit_code != 0)
        fail("command failed (" + std::to_string(res.exit_code) + "): " + join(argv, " ") + "\n" +
             res.err);
    return trim(res.out);
}

}  // namespace flor::util
