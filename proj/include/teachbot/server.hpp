#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "teachbot/hub.hpp"

namespace teachbot {

/// "host:port", "port" or ":port". Port 0 picks a free port.
struct BindAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};
BindAddress parse_bind_address(std::string_view s);

/// TCP front end for a SessionHub. Each connection speaks newline-delimited
/// JSON, or WebSocket text frames if it opens with an HTTP upgrade request.
class Server {
 public:
  Server(SessionHub& hub, BindAddress bind);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting in a background thread. Throws IoError on
  /// bind failure.
  void start();
  /// Closes the listener and every open connection, then joins all threads.
  void stop();
  bool running() const { return running_; }

  std::uint16_t bound_port() const { return port_; }

 private:
  void accept_loop();
  void serve_connection(int fd);

  SessionHub& hub_;
  BindAddress bind_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex conn_mutex_;
  std::vector<int> open_fds_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::vector<Worker> workers_;
};

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept_key(std::string_view client_key);

}  // namespace teachbot
