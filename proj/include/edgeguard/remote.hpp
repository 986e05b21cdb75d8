#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "edgeguard/backend.hpp"

namespace edgeguard {

/// Newline-delimited model protocol: the client writes one prompt line, the
/// server answers with one line of 21 space-separated decimal logits.
std::string format_logits_line(const std::vector<double>& logits);
/// Throws BackendMalformedOutput when a token is not a number.
std::vector<double> parse_logits_line(std::string_view line);

struct RemoteOptions {
  int timeout_ms = 5000;
  int retries = 2;  // reconnect attempts after the first failure
};

/// Client for a remote model server. `address` is "host:port" for a TCP
/// stream socket or "exec:<shell command>" for a child process spoken to
/// over its stdin/stdout. Calls are serialized on one connection.
class RemoteBackend final : public ClassifierBackend {
 public:
  explicit RemoteBackend(std::string address, RemoteOptions options = {});
  ~RemoteBackend() override;
  RemoteBackend(const RemoteBackend&) = delete;
  RemoteBackend& operator=(const RemoteBackend&) = delete;

  /// Throws BackendUnavailable once retries are exhausted and
  /// BackendMalformedOutput on a non-numeric reply.
  std::vector<double> logits(std::string_view prompt) const override;
  BackendDescriptor descriptor() const override { return {"remote", address_}; }

 private:
  struct Connection;
  std::unique_ptr<Connection> open() const;

  std::string address_;
  RemoteOptions options_;
  mutable std::mutex mutex_;
  mutable std::unique_ptr<Connection> conn_;
};

/// Serves a backend over the line protocol on a TCP port. Connections are
/// handled one at a time on a background thread until stop().
class LineServer {
 public:
  /// port 0 picks a free port; see port().
  LineServer(const ClassifierBackend& backend, std::uint16_t port = 0,
             std::string bind_address = "127.0.0.1");
  ~LineServer();
  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::uint64_t requests_served() const noexcept { return served_.load(); }
  void stop();

 private:
  void run();

  const ClassifierBackend& backend_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> served_{0};
  std::thread worker_;
};

/// Answers prompt lines read from `in_fd` on `out_fd` until EOF. Malformed
/// prompts get an "error ..." line. Used by the CLI's stdin/stdout mode.
void serve_stream(const ClassifierBackend& backend, int in_fd, int out_fd);

}  // namespace edgeguard
