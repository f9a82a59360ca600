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

// Newline-delimited JSON protocol for serving next-token distributions from
// another process.
//
//   server -> client, once:  {"hello":1,"V":<vocab size>,"order_hint":<int>}
//   client -> server:        {"id":<uint>,"context":[<token ids>]}
//   server -> client:        {"id":<uint>,"probs":[<V reals>]}
//                        or  {"id":<uint>,"error":"<message>"}
//
// One request is in flight per connection. The context is the full history.

#ifndef WMLAB_BRIDGE_H_
#define WMLAB_BRIDGE_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>

#include "wmlab/lm.h"

namespace wmlab {

enum class BridgeErrorKind {
  kTimeout,
  kIdMismatch,
  kMalformed,
  kNormalization,
  kConnection,
};

std::string ToString(BridgeErrorKind kind);

class BridgeError : public std::runtime_error {
 public:
  BridgeError(BridgeErrorKind kind, const std::string& what)
      : std::runtime_error("bridge " + ToString(kind) + ": " + what), kind_(kind) {}
  BridgeErrorKind kind() const { return kind_; }

 private:
  BridgeErrorKind kind_;
};

class BridgeTimeoutError : public BridgeError {
 public:
  explicit BridgeTimeoutError(const std::string& w)
      : BridgeError(BridgeErrorKind::kTimeout, w) {}
};
class BridgeIdMismatchError : public BridgeError {
 public:
  explicit BridgeIdMismatchError(const std::string& w)
      : BridgeError(BridgeErrorKind::kIdMismatch, w) {}
};
class BridgeMalformedError : public BridgeError {
 public:
  explicit BridgeMalformedError(const std::string& w)
      : BridgeError(BridgeErrorKind::kMalformed, w) {}
};
class BridgeNormalizationError : public BridgeError {
 public:
  explicit BridgeNormalizationError(const std::string& w)
      : BridgeError(BridgeErrorKind::kNormalization, w) {}
};
class BridgeConnectionError : public BridgeError {
 public:
  explicit BridgeConnectionError(const std::string& w)
      : BridgeError(BridgeErrorKind::kConnection, w) {}
};

inline constexpr std::size_t kMaxBridgeVocab = 65536;
inline constexpr double kBridgeSumTolerance = 1e-6;

// Line I/O over a pair of file descriptors (the same socket twice, or the
// two ends of a pair of pipes). Does not own the descriptors unless
// `owned` is set.
class LineChannel {
 public:
  LineChannel(int read_fd, int write_fd, bool owned = false);
  ~LineChannel();
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;

  // Next line without its terminator. std::nullopt on a clean end of
  // stream. Throws BridgeTimeoutError when `timeout` passes first.
  std::optional<std::string> ReadLine(std::chrono::milliseconds timeout);
  std::optional<std::string> ReadLine();  // no timeout
  void WriteLine(const std::string& line);

 private:
  int read_fd_;
  int write_fd_;
  bool owned_;
  std::string buffer_;
};

// A LanguageModel whose distributions come from a remote server. The
// handshake is read in the constructor; its V must equal `vocab_size`.
class RemoteModel : public LanguageModel {
 public:
  RemoteModel(int read_fd, int write_fd, std::size_t vocab_size,
              std::chrono::milliseconds timeout = std::chrono::seconds(30),
              bool owned = false);

  std::size_t vocab_size() const override { return vocab_size_; }
  ProbDistribution NextDist(std::span<const TokenId> context) const override;
  int order_hint() const { return order_hint_; }
  std::uint64_t requests_sent() const;

 private:
  mutable std::mutex mu_;
  mutable LineChannel channel_;
  mutable std::uint64_t next_id_ = 0;
  std::size_t vocab_size_;
  std::chrono::milliseconds timeout_;
  int order_hint_ = 0;
};

// Validates a response line against the expected id and vocabulary size and
// returns the (re)normalized distribution. Entries summing to within
// kBridgeSumTolerance of 1 are divided by their sum.
ProbDistribution ParseBridgeResponse(const std::string& line,
                                     std::uint64_t expected_id,
                                     std::size_t vocab_size);

std::string BridgeHello(std::size_t vocab_size, int order_hint);
std::string BridgeRequest(std::uint64_t id, std::span<const TokenId> context);

// Answers requests on one connection until the peer closes it. Requests
// that cannot be parsed get an error response; the loop continues.
void ServeModel(const LanguageModel& model, int order_hint, LineChannel& channel);

// Listens on 127.0.0.1:port (0 picks a free port) and serves connections
// one at a time, forever or until `max_connections` have been served.
// `on_listen` receives the bound port before the first accept.
void ServeTcp(const LanguageModel& model, int order_hint, int port,
              const std::function<void(int)>& on_listen = nullptr,
              std::optional<std::size_t> max_connections = std::nullopt);

// Connects to host:port and returns the socket descriptor.
int ConnectTcp(const std::string& host, int port);

}  // namespace wmlab

#endif  // WMLAB_BRIDGE_H_
