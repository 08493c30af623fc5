// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

namespace memopt {

// One request line out, one response line back, over a child process's
// stdin/stdout or a TCP stream. Endpoints are written `exec:<shell command>`
// or `tcp:<host>:<port>`.
//
// The connection is opened lazily and reopened after any failure, so a
// timed-out peer never answers a later request with a stale line.
class LineClient {
public:
  explicit LineClient(std::string endpoint,
                      std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
  ~LineClient();
  LineClient(const LineClient &) = delete;
  LineClient &operator=(const LineClient &) = delete;

  const std::string &endpoint() const { return endpoint_; }
  std::chrono::milliseconds timeout() const { return timeout_; }

  // `line` must not contain a newline. Returns the response without its
  // terminator. Throws kTimeout, kProtocol (peer closed or wrote garbage)
  // or kIo (cannot connect).
  std::string request(std::string_view line);

private:
  struct Conn;

  void open();
  void close();

  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<Conn> conn_;
};

// Splits "OK <payload>" / "ERR <message>". Throws kProtocol for anything
// else, or with the peer's message for ERR.
std::string expect_ok(std::string_view response);

}  // namespace memopt
