#include "teachbot/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <optional>

#include "teachbot/error.hpp"

namespace teachbot {

BindAddress parse_bind_address(std::string_view s) {
  BindAddress b;
  std::string_view port = s;
  if (const auto colon = s.rfind(':'); colon != std::string_view::npos) {
    if (colon > 0) b.host = std::string(s.substr(0, colon));
    port = s.substr(colon + 1);
  }
  if (port.empty() || port.size() > 5 || !std::all_of(port.begin(), port.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw InvalidInput("bad bind address '" + std::string(s) + "'");
  }
  const int p = std::stoi(std::string(port));
  if (p > 65535) throw InvalidInput("port out of range in '" + std::string(s) + "'");
  b.port = static_cast<std::uint16_t>(p);
  return b;
}

std::string websocket_accept_key(std::string_view client_key) {
  const std::string in = std::string(client_key) + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  std::array<unsigned char, SHA_DIGEST_LENGTH> digest{};
  SHA1(reinterpret_cast<const unsigned char*>(in.data()), in.size(), digest.data());
  std::array<unsigned char, 4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1> out{};
  const int n = EVP_EncodeBlock(out.data(), digest.data(), SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<const char*>(out.data()), static_cast<std::size_t>(n));
}

namespace {

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

/// Buffered reader over a socket.
class Reader {
 public:
  explicit Reader(int fd) : fd_(fd) {}

  std::optional<std::string> line(std::size_t limit = 1 << 20) {
    while (true) {
      if (const auto nl = buf_.find('\n'); nl != std::string::npos) {
        std::string l = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!l.empty() && l.back() == '\r') l.pop_back();
        return l;
      }
      if (buf_.size() > limit || !fill()) return std::nullopt;
    }
  }

  std::optional<std::string> bytes(std::size_t n) {
    while (buf_.size() < n) {
      if (!fill()) return std::nullopt;
    }
    std::string out = buf_.substr(0, n);
    buf_.erase(0, n);
    return out;
  }

  bool peek_starts_with(std::string_view prefix) {
    while (buf_.size() < prefix.size()) {
      if (std::string_view(buf_) != prefix.substr(0, buf_.size())) return false;
      if (!fill()) return false;
    }
    return std::string_view(buf_).substr(0, prefix.size()) == prefix;
  }

 private:
  bool fill() {
    char tmp[4096];
    while (true) {
      const ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      buf_.append(tmp, static_cast<std::size_t>(n));
      return true;
    }
  }

  int fd_;
  std::string buf_;
};

std::string ws_frame(std::uint8_t opcode, std::string_view payload) {
  std::string f;
  f.push_back(static_cast<char>(0x80 | opcode));
  const auto n = payload.size();
  if (n < 126) {
    f.push_back(static_cast<char>(n));
  } else if (n < 65536) {
    f.push_back(static_cast<char>(126));
    f.push_back(static_cast<char>((n >> 8) & 0xff));
    f.push_back(static_cast<char>(n & 0xff));
  } else {
    f.push_back(static_cast<char>(127));
    for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xff));
  }
  f.append(payload);
  return f;
}

struct WsMessage {
  std::uint8_t opcode = 0;
  std::string payload;
};

constexpr std::uint64_t kMaxWsPayload = 1 << 20;

std::optional<WsMessage> read_ws_frame(Reader& r) {
  const auto head = r.bytes(2);
  if (!head) return std::nullopt;
  const auto b0 = static_cast<std::uint8_t>((*head)[0]);
  const auto b1 = static_cast<std::uint8_t>((*head)[1]);
  std::uint64_t len = b1 & 0x7f;
  if (len == 126) {
    const auto ext = r.bytes(2);
    if (!ext) return std::nullopt;
    len = (static_cast<std::uint64_t>(static_cast<std::uint8_t>((*ext)[0])) << 8) | static_cast<std::uint8_t>((*ext)[1]);
  } else if (len == 127) {
    const auto ext = r.bytes(8);
    if (!ext) return std::nullopt;
    len = 0;
    for (char c : *ext) len = (len << 8) | static_cast<std::uint8_t>(c);
  }
  if (len > kMaxWsPayload) return std::nullopt;
  std::array<std::uint8_t, 4> mask{};
  const bool masked = (b1 & 0x80) != 0;
  if (masked) {
    const auto m = r.bytes(4);
    if (!m) return std::nullopt;
    std::copy(m->begin(), m->end(), mask.begin());
  }
  auto payload = r.bytes(static_cast<std::size_t>(len));
  if (!payload) return std::nullopt;
  if (masked) {
    for (std::size_t i = 0; i < payload->size(); ++i) (*payload)[i] = static_cast<char>((*payload)[i] ^ mask[i % 4]);
  }
  return WsMessage{static_cast<std::uint8_t>(b0 & 0x0f), std::move(*payload)};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

Server::Server(SessionHub& hub, BindAddress bind) : hub_(hub), bind_(std::move(bind)) {}

Server::~Server() { stop(); }

void Server::start() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(bind_.port);
  if (const int rc = ::getaddrinfo(bind_.host.empty() ? nullptr : bind_.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw IoError("cannot resolve '" + bind_.host + "': " + gai_strerror(rc));
  }
  int fd = -1;
  std::string last_error = "no addresses";
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 64) == 0) break;
    last_error = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw IoError("cannot bind " + bind_.host + ":" + port + ": " + last_error);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                     : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  listen_fd_ = fd;
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    const std::lock_guard lock(conn_mutex_);
    if (!running_) {
      ::close(fd);
      break;
    }
    std::erase_if(workers_, [](Worker& w) {
      if (!*w.done) return false;
      w.thread.join();
      return true;
    });
    open_fds_.push_back(fd);
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back({std::thread([this, fd, done] {
                          serve_connection(fd);
                          *done = true;
                        }),
                        done});
  }
}

void Server::serve_connection(int fd) {
  Reader reader(fd);
  Connection conn;

  if (reader.peek_starts_with("GET ")) {
    std::string key;
    bool upgrade = false;
    while (auto l = reader.line(16384)) {
      if (l->empty()) break;
      const auto colon = l->find(':');
      if (colon == std::string::npos) continue;
      const std::string name = lower(trim(std::string_view(*l).substr(0, colon)));
      const std::string value = trim(std::string_view(*l).substr(colon + 1));
      if (name == "sec-websocket-key") key = value;
      if (name == "upgrade" && lower(value) == "websocket") upgrade = true;
    }
    if (!upgrade || key.empty()) {
      send_all(fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
    } else if (send_all(fd, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                            "Sec-WebSocket-Accept: " + websocket_accept_key(key) + "\r\n\r\n")) {
      std::string partial;
      while (auto frame = read_ws_frame(reader)) {
        if (frame->opcode == 0x8) {
          send_all(fd, ws_frame(0x8, ""));
          break;
        }
        if (frame->opcode == 0x9) {
          send_all(fd, ws_frame(0xA, frame->payload));
          continue;
        }
        if (frame->opcode != 0x1 && frame->opcode != 0x0) continue;
        bool ok = true;
        for (const auto& reply : hub_.handle_text(conn, frame->payload)) {
          ok = ok && send_all(fd, ws_frame(0x1, reply.dump()));
        }
        if (!ok) break;
      }
    }
  } else {
    while (auto l = reader.line()) {
      if (trim(*l).empty()) continue;
      std::string out;
      for (const auto& reply : hub_.handle_text(conn, *l)) out += reply.dump() + "\n";
      if (!send_all(fd, out)) break;
    }
  }

  const std::lock_guard lock(conn_mutex_);
  if (const auto it = std::find(open_fds_.begin(), open_fds_.end(), fd); it != open_fds_.end()) {
    open_fds_.erase(it);
    ::close(fd);
  }
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<Worker> workers;
  {
    const std::lock_guard lock(conn_mutex_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.thread.join();
  const std::lock_guard lock(conn_mutex_);
  for (int fd : open_fds_) ::close(fd);
  open_fds_.clear();
}

}  // namespace teachbot
