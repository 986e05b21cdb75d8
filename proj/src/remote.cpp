#include "edgeguard/remote.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <optional>

#include "edgeguard/error.hpp"
#include "edgeguard/flow.hpp"

namespace edgeguard {

std::string format_logits_line(const std::vector<double>& logits) {
  std::string line;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i > 0) line.push_back(' ');
    line += format_double(logits[i]);
  }
  return line;
}

std::vector<double> parse_logits_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<double> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + j, v);
    if (ec != std::errc() || ptr != line.data() + j) {
      throw Error(ErrorCode::BackendMalformedOutput,
                  "non-numeric logit '" + std::string(line.substr(i, j - i)) + "'",
                  std::string(line), i);
    }
    out.push_back(v);
    i = j;
  }
  return out;
}

namespace {

enum class ReadStatus { Line, Timeout, Closed };

class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  ReadStatus read_line(std::string& line, int timeout_ms) {
    for (;;) {
      if (auto nl = buf_.find('\n'); nl != std::string::npos) {
        line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return ReadStatus::Line;
      }
      pollfd p{fd_, POLLIN, 0};
      int rc = ::poll(&p, 1, timeout_ms);
      if (rc == 0) return ReadStatus::Timeout;
      if (rc < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::Closed;
      }
      char chunk[4096];
      ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return ReadStatus::Closed;
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
};

bool write_all(int fd, std::string_view data, bool is_socket) {
  while (!data.empty()) {
    ssize_t n = is_socket ? ::send(fd, data.data(), data.size(), MSG_NOSIGNAL)
                          : ::write(fd, data.data(), data.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

int connect_tcp(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0) return -1;
  int fd = -1;
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd >= 0) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  return fd;
}

}  // namespace

struct RemoteBackend::Connection {
  int read_fd = -1;
  int write_fd = -1;
  pid_t child = -1;
  bool is_socket = false;
  LineReader reader{-1};

  ~Connection() {
    if (write_fd >= 0 && write_fd != read_fd) ::close(write_fd);
    if (read_fd >= 0) ::close(read_fd);
    if (child > 0) {
      ::kill(child, SIGTERM);
      ::waitpid(child, nullptr, 0);
    }
  }
};

RemoteBackend::RemoteBackend(std::string address, RemoteOptions options)
    : address_(std::move(address)), options_(options) {
  if (address_.empty()) throw Error(ErrorCode::BackendUnavailable, "empty remote address");
}

RemoteBackend::~RemoteBackend() = default;

std::unique_ptr<RemoteBackend::Connection> RemoteBackend::open() const {
  auto c = std::make_unique<Connection>();
  if (address_.rfind("exec:", 0) == 0) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) return nullptr;
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      return nullptr;
    }
    pid_t pid = ::fork();
    if (pid < 0) return nullptr;
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      const std::string cmd = address_.substr(5);
      ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    c->child = pid;
    c->write_fd = to_child[1];
    c->read_fd = from_child[0];
  } else {
    const auto colon = address_.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address_.size()) {
      throw Error(ErrorCode::BackendUnavailable,
                  "remote address must be host:port or exec:<command>", address_);
    }
    std::string host = address_.substr(0, colon);
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') {
      host = host.substr(1, host.size() - 2);
    }
    int fd = connect_tcp(host, address_.substr(colon + 1));
    if (fd < 0) return nullptr;
    c->read_fd = c->write_fd = fd;
    c->is_socket = true;
  }
  c->reader = LineReader(c->read_fd);
  return c;
}

std::vector<double> RemoteBackend::logits(std::string_view prompt) const {
  std::lock_guard lock(mutex_);
  std::string request(prompt);
  request.push_back('\n');
  std::string last_problem = "not attempted";
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (!conn_) conn_ = open();
    if (!conn_) {
      last_problem = "connect failed: " + std::string(std::strerror(errno));
      continue;
    }
    if (!write_all(conn_->write_fd, request, conn_->is_socket)) {
      last_problem = "write failed";
      conn_.reset();
      continue;
    }
    std::string line;
    switch (conn_->reader.read_line(line, options_.timeout_ms)) {
      case ReadStatus::Line:
        return parse_logits_line(line);
      case ReadStatus::Timeout:
        last_problem = "timed out after " + std::to_string(options_.timeout_ms) + " ms";
        break;
      case ReadStatus::Closed:
        last_problem = "connection closed";
        break;
    }
    conn_.reset();
  }
  throw Error(ErrorCode::BackendUnavailable, address_ + ": " + last_problem, address_);
}

LineServer::LineServer(const ClassifierBackend& backend, std::uint16_t port,
                       std::string bind_address)
    : backend_(backend) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::IoFailure, "socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1 ||
      ::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 8) != 0) {
    ::close(listen_fd_);
    throw Error(ErrorCode::IoFailure, "cannot listen on " + bind_address + ":" +
                                          std::to_string(port) + ": " + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  worker_ = std::thread([this] { run(); });
}

LineServer::~LineServer() { stop(); }

void LineServer::stop() {
  if (stopping_.exchange(true)) return;
  if (worker_.joinable()) worker_.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

namespace {

std::string answer(const ClassifierBackend& backend, const std::string& prompt) {
  try {
    return format_logits_line(backend.logits(prompt)) + "\n";
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n' || ch == '\r') ch = ' ';
    }
    return "error " + msg + "\n";
  }
}

}  // namespace

void LineServer::run() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    LineReader reader(fd);
    std::string line;
    while (!stopping_) {
      auto status = reader.read_line(line, 50);
      if (status == ReadStatus::Timeout) continue;
      if (status == ReadStatus::Closed) break;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string reply = answer(backend_, line);
      ++served_;
      if (!write_all(fd, reply, true)) break;
    }
    ::close(fd);
  }
}

void serve_stream(const ClassifierBackend& backend, int in_fd, int out_fd) {
  LineReader reader(in_fd);
  std::string line;
  while (reader.read_line(line, -1) == ReadStatus::Line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!write_all(out_fd, answer(backend, line), false)) break;
  }
}

}  // namespace edgeguard
