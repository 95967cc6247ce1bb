#include "subprocess.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <mutex>

#include "socrat/error.hpp"

namespace socrat::detail {

namespace {

std::mutex& adapter_mutex() {
  static std::mutex m;
  return m;
}

class Child {
 public:
  explicit Child(const std::string& command) {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
      throw BlackBoxFailure("cannot create pipes for subprocess");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw BlackBoxFailure("cannot fork subprocess");
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
  }

  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;

  ~Child() {
    close_input();
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
      int status = 0;
      if (::waitpid(pid_, &status, WNOHANG) == 0) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
      }
    }
  }

  bool write_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const auto n = ::write(to_child_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  // Returns false on EOF or timeout.
  bool read_line(std::string& line, std::chrono::steady_clock::time_point deadline) {
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        buffer_.erase(0, nl + 1);
        return true;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return false;
      pollfd pfd{from_child_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0 && errno == EINTR) continue;
      if (ready <= 0) return false;
      char chunk[4096];
      const auto n = ::read(from_child_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void close_input() {
    if (to_child_ >= 0) {
      ::close(to_child_);
      to_child_ = -1;
    }
  }

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

}  // namespace

std::vector<std::string> run_line_protocol(const std::string& command,
                                           const std::vector<std::string>& lines,
                                           std::chrono::milliseconds timeout) {
  std::lock_guard lock(adapter_mutex());
  // A child that dies mid-batch must surface as a failure, not a signal.
  ::signal(SIGPIPE, SIG_IGN);

  Child child(command);
  std::vector<std::string> replies;
  replies.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find('\n') != std::string::npos) {
      throw BlackBoxFailure("input contains a newline", i);
    }
    if (!child.write_line(lines[i])) {
      throw BlackBoxFailure("subprocess closed its input", i);
    }
    std::string reply;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    if (!child.read_line(reply, deadline)) {
      throw BlackBoxFailure("subprocess exited or timed out", i);
    }
    replies.push_back(std::move(reply));
  }
  return replies;
}

}  // namespace socrat::detail
