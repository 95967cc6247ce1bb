#pragma once

#include <httplib.h>

#include <string>
#include <thread>

// Local HTTP server on an ephemeral port, stopped on destruction.
class StubServer {
 public:
  template <class Setup>
  explicit StubServer(Setup&& setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// A port nothing listens on.
inline std::string dead_url() {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  return "http://127.0.0.1:" + std::to_string(port);
}
