// Copyright 2026 The wmlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wmlab/bridge.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include "json.hpp"

namespace wmlab {
namespace {

using Clock = std::chrono::steady_clock;

std::string Errno(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

}  // namespace

std::string ToString(BridgeErrorKind kind) {
  switch (kind) {
    case BridgeErrorKind::kTimeout:
      return "timeout";
    case BridgeErrorKind::kIdMismatch:
      return "id mismatch";
    case BridgeErrorKind::kMalformed:
      return "malformed response";
    case BridgeErrorKind::kNormalization:
      return "normalization failure";
    case BridgeErrorKind::kConnection:
      return "connection error";
  }
  return "error";
}

LineChannel::LineChannel(int read_fd, int write_fd, bool owned)
    : read_fd_(read_fd), write_fd_(write_fd), owned_(owned) {}

LineChannel::~LineChannel() {
  if (!owned_) return;
  ::close(read_fd_);
  if (write_fd_ != read_fd_) ::close(write_fd_);
}

std::optional<std::string> LineChannel::ReadLine() {
  return ReadLine(std::chrono::milliseconds(-1));
}

std::optional<std::string> LineChannel::ReadLine(std::chrono::milliseconds timeout) {
  const bool bounded = timeout.count() >= 0;
  const auto deadline = Clock::now() + timeout;
  char chunk[65536];
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    int wait_ms = -1;
    if (bounded) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0) throw BridgeTimeoutError("no complete line in time");
      wait_ms = static_cast<int>(left.count());
    }
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw BridgeConnectionError(Errno("poll"));
    }
    if (ready == 0) throw BridgeTimeoutError("no complete line in time");
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw BridgeConnectionError(Errno("read"));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      throw BridgeConnectionError("stream ended inside a line");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void LineChannel::WriteLine(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BridgeConnectionError(Errno("write"));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string BridgeHello(std::size_t vocab_size, int order_hint) {
  nlohmann::ordered_json j;
  j["hello"] = 1;
  j["V"] = vocab_size;
  j["order_hint"] = order_hint;
  return j.dump();
}

std::string BridgeRequest(std::uint64_t id, std::span<const TokenId> context) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["context"] = std::vector<TokenId>(context.begin(), context.end());
  return j.dump();
}

ProbDistribution ParseBridgeResponse(const std::string& line,
                                     std::uint64_t expected_id,
                                     std::size_t vocab_size) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw BridgeMalformedError(std::string("not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned()) {
    throw BridgeMalformedError("response without an unsigned id");
  }
  const auto id = j["id"].get<std::uint64_t>();
  if (id != expected_id) {
    throw BridgeIdMismatchError("expected id " + std::to_string(expected_id) +
                                ", got " + std::to_string(id));
  }
  if (j.contains("error")) {
    const auto& e = j["error"];
    throw BridgeConnectionError("server reported: " +
                                (e.is_string() ? e.get<std::string>() : e.dump()));
  }
  if (!j.contains("probs") || !j["probs"].is_array()) {
    throw BridgeMalformedError("response without probs");
  }
  const auto& arr = j["probs"];
  if (arr.size() != vocab_size) {
    throw BridgeMalformedError("probs has " + std::to_string(arr.size()) +
                               " entries, expected " + std::to_string(vocab_size));
  }
  std::vector<double> probs(vocab_size);
  double sum = 0.0;
  for (std::size_t i = 0; i < vocab_size; ++i) {
    if (!arr[i].is_number()) throw BridgeMalformedError("non-numeric probability");
    probs[i] = arr[i].get<double>();
    if (!std::isfinite(probs[i]) || probs[i] < 0.0) {
      throw BridgeNormalizationError("probability out of range at index " +
                                     std::to_string(i));
    }
    sum += probs[i];
  }
  if (!(std::fabs(sum - 1.0) <= kBridgeSumTolerance)) {
    throw BridgeNormalizationError("probabilities sum to " + std::to_string(sum));
  }
  if (sum != 1.0) {
    for (double& p : probs) p /= sum;
  }
  return ProbDistribution(std::move(probs));
}

RemoteModel::RemoteModel(int read_fd, int write_fd, std::size_t vocab_size,
                         std::chrono::milliseconds timeout, bool owned)
    : channel_(read_fd, write_fd, owned), vocab_size_(vocab_size), timeout_(timeout) {
  if (vocab_size == 0 || vocab_size > kMaxBridgeVocab) {
    throw std::invalid_argument("bridge vocabulary must be in [1, 65536]");
  }
  const auto line = channel_.ReadLine(timeout_);
  if (!line) throw BridgeConnectionError("closed before the handshake");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(*line);
  } catch (const nlohmann::json::exception& e) {
    throw BridgeMalformedError(std::string("handshake is not JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("hello", 0) != 1 || !j.contains("V") ||
      !j["V"].is_number_unsigned()) {
    throw BridgeMalformedError("bad handshake: " + *line);
  }
  const auto v = j["V"].get<std::size_t>();
  if (v != vocab_size) {
    throw BridgeConnectionError("server vocabulary " + std::to_string(v) +
                                " != local " + std::to_string(vocab_size));
  }
  if (j.contains("order_hint") && j["order_hint"].is_number_integer()) {
    order_hint_ = j["order_hint"].get<int>();
  }
}

std::uint64_t RemoteModel::requests_sent() const {
  std::lock_guard<std::mutex> lock(mu_);
  return next_id_;
}

ProbDistribution RemoteModel::NextDist(std::span<const TokenId> context) const {
  std::lock_guard<std::mutex> lock(mu_);
  const std::uint64_t id = next_id_++;
  channel_.WriteLine(BridgeRequest(id, context));
  const auto line = channel_.ReadLine(timeout_);
  if (!line) throw BridgeConnectionError("server closed the connection");
  return ParseBridgeResponse(*line, id, vocab_size_);
}

void ServeModel(const LanguageModel& model, int order_hint, LineChannel& channel) {
  const std::size_t v = model.vocab_size();
  channel.WriteLine(BridgeHello(v, order_hint));
  while (auto line = channel.ReadLine()) {
    if (line->empty()) continue;
    nlohmann::ordered_json out;
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(*line);
      if (!req.is_object() || !req.contains("id") || !req["id"].is_number_unsigned()) {
        throw std::invalid_argument("request needs an unsigned id");
      }
      out["id"] = req["id"].get<std::uint64_t>();
      if (!req.contains("context") || !req["context"].is_array()) {
        throw std::invalid_argument("request needs a context array");
      }
      TokenSequence ctx;
      for (const auto& t : req["context"]) {
        if (!t.is_number_unsigned() || t.get<std::uint64_t>() >= v) {
          throw std::invalid_argument("context id out of range");
        }
        ctx.push_back(t.get<TokenId>());
      }
      const ProbDistribution dist = model.NextDist(ctx);
      out["probs"] = std::vector<double>(dist.probs().begin(), dist.probs().end());
    } catch (const std::exception& e) {
      if (!out.contains("id")) out["id"] = nullptr;
      out.erase("probs");
      out["error"] = e.what();
    }
    channel.WriteLine(out.dump());
  }
}

void ServeTcp(const LanguageModel& model, int order_hint, int port,
              const std::function<void(int)>& on_listen,
              std::optional<std::size_t> max_connections) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw BridgeConnectionError(Errno("socket"));
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(fd, 4) < 0) {
    const std::string msg = Errno("bind/listen");
    ::close(fd);
    throw BridgeConnectionError(msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listen) on_listen(ntohs(addr.sin_port));
  for (std::size_t served = 0; !max_connections || served < *max_connections; ++served) {
    const int conn = ::accept(fd, nullptr, nullptr);
    if (conn < 0) {
      if (errno == EINTR) continue;
      const std::string msg = Errno("accept");
      ::close(fd);
      throw BridgeConnectionError(msg);
    }
    LineChannel channel(conn, conn, true);
    try {
      ServeModel(model, order_hint, channel);
    } catch (const BridgeError&) {
      // A dropped client only ends its own connection.
    }
  }
  ::close(fd);
}

int ConnectTcp(const std::string& host, int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw BridgeConnectionError(Errno("socket"));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(),
                  &addr.sin_addr) != 1) {
    ::close(fd);
    throw BridgeConnectionError("bad IPv4 address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    const std::string msg = Errno("connect");
    ::close(fd);
    throw BridgeConnectionError(msg);
  }
  return fd;
}

}  // namespace wmlab
