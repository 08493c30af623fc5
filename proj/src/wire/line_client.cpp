// SPDX-License-Identifier: Apache-2.0

#include "memopt/wire.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "memopt/error.hpp"

namespace memopt {

namespace {

constexpr std::size_t kMaxLine = 1 << 20;

void ignore_sigpipe() {
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

}  // namespace

struct LineClient::Conn {
  int in_fd = -1;   // we write requests here
  int out_fd = -1;  // and read responses here
  pid_t child = -1;
  std::string buffer;

  ~Conn() {
    if (in_fd >= 0) ::close(in_fd);
    if (out_fd >= 0 && out_fd != in_fd) ::close(out_fd);
    if (child > 0) {
      ::kill(-child, SIGKILL);
      ::kill(child, SIGKILL);
      ::waitpid(child, nullptr, 0);
    }
  }
};

LineClient::LineClient(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
  if (!endpoint_.starts_with("exec:") && !endpoint_.starts_with("tcp:"))
    throw Error(ErrorCode::kConfig, "endpoint must start with exec: or tcp: (" + endpoint_ + ")");
}

LineClient::~LineClient() = default;

void LineClient::close() { conn_.reset(); }

void LineClient::open() {
  ignore_sigpipe();
  auto conn = std::make_unique<Conn>();
  if (endpoint_.starts_with("exec:")) {
    // exec keeps the peer as our direct child so it can be reaped.
    const std::string command = "exec " + endpoint_.substr(5);
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw Error(ErrorCode::kIo, "pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw Error(ErrorCode::kIo, "pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorCode::kIo, "fork failed");
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
      ::_exit(127);
    }
    // Both sides set the group so a kill right after fork still reaches it.
    ::setpgid(pid, pid);
    ::close(to_child[0]);
    ::close(from_child[1]);
    conn->in_fd = to_child[1];
    conn->out_fd = from_child[0];
    conn->child = pid;
    ::fcntl(conn->in_fd, F_SETFD, FD_CLOEXEC);
    ::fcntl(conn->out_fd, F_SETFD, FD_CLOEXEC);
  } else {
    const std::string rest = endpoint_.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::kConfig, "tcp endpoint needs host:port");
    const std::string host = rest.substr(0, colon);
    const std::string port = rest.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo *res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0)
      throw Error(ErrorCode::kIo, "cannot resolve " + host);
    int fd = -1;
    for (addrinfo *ai = res; ai; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw Error(ErrorCode::kIo, "cannot connect to " + endpoint_);
    conn->in_fd = fd;
    conn->out_fd = fd;
  }
  conn_ = std::move(conn);
}

std::string LineClient::request(std::string_view line) {
  if (line.find('\n') != std::string_view::npos)
    throw Error(ErrorCode::kProtocol, "request contains a newline");
  if (!conn_) open();
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  auto remaining_ms = [&] {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    return static_cast<int>(std::max<std::int64_t>(0, left.count()));
  };

  std::string out(line);
  out += '\n';
  std::size_t sent = 0;
  while (sent < out.size()) {
    const ssize_t n = ::write(conn_->in_fd, out.data() + sent, out.size() - sent);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      close();
      throw Error(ErrorCode::kProtocol, "peer closed while writing to " + endpoint_);
    }
    sent += static_cast<std::size_t>(n);
  }

  for (;;) {
    const auto nl = conn_->buffer.find('\n');
    if (nl != std::string::npos) {
      std::string response = conn_->buffer.substr(0, nl);
      conn_->buffer.erase(0, nl + 1);
      if (!response.empty() && response.back() == '\r') response.pop_back();
      return response;
    }
    if (conn_->buffer.size() > kMaxLine) {
      close();
      throw Error(ErrorCode::kProtocol, "response line too long from " + endpoint_);
    }
    pollfd pfd{conn_->out_fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms());
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) {
      close();
      throw Error(ErrorCode::kTimeout, "no response from " + endpoint_ + " within " +
                                           std::to_string(timeout_.count()) + " ms");
    }
    char chunk[4096];
    const ssize_t n = ::read(conn_->out_fd, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      close();
      throw Error(ErrorCode::kProtocol, "peer closed before answering (" + endpoint_ + ")");
    }
    conn_->buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string expect_ok(std::string_view response) {
  if (response.starts_with("OK ")) return std::string(response.substr(3));
  if (response == "OK") return {};
  if (response.starts_with("ERR"))
    throw Error(ErrorCode::kProtocol, "peer error: " + std::string(response.substr(std::min<std::size_t>(4, response.size()))));
  throw Error(ErrorCode::kProtocol, "malformed response: " + std::string(response.substr(0, 80)));
}

}  // namespace memopt
