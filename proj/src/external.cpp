// External evaluator: a child process driven over its stdin/stdout with
// one JSON object per line.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "scbo/problems.hpp"

namespace scbo {

namespace {

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command) {
    static const bool sigpipe_ignored = [] {
      ::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;

    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw EvaluationError("external evaluator: pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw EvaluationError("external evaluator: pipe failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw EvaluationError("external evaluator: fork failed");
    if (pid_ == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ <= 0) return;
    int status = 0;
    bool exited = reaped_;
    for (int i = 0; i < 50 && !exited; ++i) {
      exited = ::waitpid(pid_, &status, WNOHANG) == pid_;
      if (!exited) ::usleep(10000);
    }
    // Stragglers in the evaluator's process group go too.
    ::kill(-pid_, SIGKILL);
    if (!exited) ::waitpid(pid_, &status, 0);
  }

  void write_line(const std::string& line) {
    std::string data = line + "\n";
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      const ssize_t n = ::write(write_fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EvaluationError("external evaluator: write failed (" + exit_description() + ")");
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0)
        throw EvaluationError("external evaluator: timed out after " + std::to_string(timeout.count()) + " ms");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0)
        throw EvaluationError("external evaluator: unexpected end of output (" + exit_description() + ")");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  std::string exit_description() {
    if (reaped_) return describe_status(status_);
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, &status_, WNOHANG) == pid_) {
        reaped_ = true;
        return describe_status(status_);
      }
      ::usleep(5000);
    }
    return "process still running";
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
  bool reaped_ = false;
  int status_ = 0;
};

std::string format_request(const Vector& x) {
  std::string out = "{\"x\": [";
  char buf[32];
  for (Index i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", x[i]);
    if (i > 0) out += ", ";
    out += buf;
  }
  out += "]}";
  return out;
}

class ExternalEvaluator {
 public:
  ExternalEvaluator(ExternalCommand command, int dim, int m)
      : command_(std::move(command)), dim_(dim), m_(m) {}

  Evaluation evaluate(const Vector& x) {
    std::lock_guard lock(mutex_);
    if (failed_) throw EvaluationError("external evaluator: unusable after earlier failure: " + failure_);
    try {
      if (!child_) start();
      child_->write_line(format_request(x));
      return parse_reply(child_->read_line(command_.timeout));
    } catch (const EvaluationError& e) {
      failed_ = true;
      failure_ = e.what();
      child_.reset();
      throw;
    }
  }

 private:
  void start() {
    child_ = std::make_unique<ChildProcess>(command_.command);
    const std::string line = child_->read_line(command_.timeout);
    nlohmann::json hello;
    try {
      hello = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw EvaluationError("external evaluator: malformed handshake '" + line + "'");
    }
    if (!hello.is_object() || !hello.contains("d") || !hello.contains("m") ||
        !hello["d"].is_number_integer() || !hello["m"].is_number_integer())
      throw EvaluationError("external evaluator: handshake must be {\"d\": int, \"m\": int}, got '" + line + "'");
    const int d = hello["d"].get<int>();
    const int m = hello["m"].get<int>();
    if (d != dim_ || m != m_)
      throw EvaluationError("external evaluator: handshake d=" + std::to_string(d) + ", m=" +
                            std::to_string(m) + " does not match configured d=" + std::to_string(dim_) +
                            ", m=" + std::to_string(m_));
  }

  Evaluation parse_reply(const std::string& line) const {
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw EvaluationError("external evaluator: malformed reply '" + line + "'");
    }
    if (!reply.is_object() || !reply.contains("objective") || !reply["objective"].is_number() ||
        !reply.contains("constraints") || !reply["constraints"].is_array())
      throw EvaluationError("external evaluator: reply must be {\"objective\": float, \"constraints\": [...]}, got '" +
                            line + "'");
    const auto& cons = reply["constraints"];
    if (static_cast<int>(cons.size()) != m_)
      throw EvaluationError("external evaluator: reply has " + std::to_string(cons.size()) +
                            " constraint values, expected " + std::to_string(m_));
    Evaluation e;
    e.objective = reply["objective"].get<double>();
    e.constraints.resize(m_);
    for (int i = 0; i < m_; ++i) {
      if (!cons[static_cast<std::size_t>(i)].is_number())
        throw EvaluationError("external evaluator: non-numeric constraint value in '" + line + "'");
      e.constraints[i] = cons[static_cast<std::size_t>(i)].get<double>();
    }
    if (!std::isfinite(e.objective) || !e.constraints.allFinite())
      throw EvaluationError("external evaluator: non-finite value in '" + line + "'");
    return e;
  }

  ExternalCommand command_;
  int dim_;
  int m_;
  std::mutex mutex_;
  std::unique_ptr<ChildProcess> child_;
  bool failed_ = false;
  std::string failure_;
};

}  // namespace

ProblemSpec external_problem(const ExternalCommand& command, int dim, int constraint_count,
                             Vector lower, Vector upper, std::string name) {
  ProblemSpec p;
  p.name = std::move(name);
  p.dim = dim;
  p.lower = std::move(lower);
  p.upper = std::move(upper);
  p.constraint_count = constraint_count;
  auto evaluator = std::make_shared<ExternalEvaluator>(command, dim, constraint_count);
  p.evaluate = [evaluator](const Vector& x) { return evaluator->evaluate(x); };
  p.validate();
  return p;
}

}  // namespace scbo
