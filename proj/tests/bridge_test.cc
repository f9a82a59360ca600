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

#include <gtest/gtest.h>
#include <unistd.h>

#include <csignal>
#include <functional>
#include <future>
#include <memory>
#include <thread>

#include "json.hpp"
#include "wmlab/aar.h"
#include "wmlab/kgw.h"
#include "wmlab/synth.h"

namespace wmlab {
namespace {

using std::chrono::milliseconds;

// A server thread on one end of a pipe pair and a client model on the other.
class PipeBridge {
 public:
  using Server = std::function<void(LineChannel&)>;

  PipeBridge(std::size_t v, Server server, milliseconds timeout = milliseconds(5000)) {
    int up[2], down[2];
    if (::pipe(up) != 0 || ::pipe(down) != 0) throw std::runtime_error("pipe");
    thread_ = std::thread([fd_in = up[0], fd_out = down[1], server = std::move(server)] {
      LineChannel ch(fd_in, fd_out, true);
      try {
        server(ch);
      } catch (const std::exception&) {
      }
    });
    try {
      model_ = std::make_unique<RemoteModel>(down[0], up[1], v, timeout, true);
    } catch (...) {
      ::close(down[0]);
      ::close(up[1]);
      thread_.join();
      throw;
    }
  }
  ~PipeBridge() {
    model_.reset();
    thread_.join();
  }

  RemoteModel& model() { return *model_; }

 private:
  std::thread thread_;
  std::unique_ptr<RemoteModel> model_;
};

// Answers the first request with `reply(id)` and then drains until EOF.
PipeBridge::Server Scripted(std::size_t v, std::function<std::string(std::uint64_t)> reply) {
  return [v, reply](LineChannel& ch) {
    ch.WriteLine(BridgeHello(v, 2));
    if (auto line = ch.ReadLine()) {
      const auto id = nlohmann::json::parse(*line)["id"].get<std::uint64_t>();
      ch.WriteLine(reply(id));
    }
    while (ch.ReadLine()) {
    }
  };
}

std::string Probs(std::uint64_t id, const std::vector<double>& p) {
  nlohmann::json j;
  j["id"] = id;
  j["probs"] = p;
  return j.dump();
}

const NGramModel& Local() {
  static const NGramModel* m = [] {
    const SynthLanguage lang(SynthParams{.vocab_size = 300});
    return new NGramModel(TrainNGram(lang.Sample(2000, 1), 3, {0.01, 0.3}, 300));
  }();
  return *m;
}

PipeBridge::Server ServeLocal() {
  return [](LineChannel& ch) { ServeModel(Local(), 3, ch); };
}

class BridgeTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { std::signal(SIGPIPE, SIG_IGN); }
};

TEST_F(BridgeTest, MessageFormats) {
  EXPECT_EQ(BridgeHello(300, 4), R"({"hello":1,"V":300,"order_hint":4})");
  const TokenSequence ctx = {5, 0, 17};
  EXPECT_EQ(BridgeRequest(12, ctx), R"({"id":12,"context":[5,0,17]})");
  EXPECT_EQ(BridgeRequest(0, {}), R"({"id":0,"context":[]})");
}

TEST_F(BridgeTest, ServedModelMatchesExactly) {
  PipeBridge b(300, ServeLocal());
  EXPECT_EQ(b.model().order_hint(), 3);
  const SynthLanguage lang(SynthParams{.vocab_size = 300});
  for (const auto& ctx : lang.Prompts(20, 5, 3)) {
    const auto want = Local().NextDist(ctx);
    const auto got = b.model().NextDist(ctx);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t t = 0; t < want.size(); ++t) EXPECT_NEAR(got[t], want[t], 1e-15);
  }
  EXPECT_EQ(b.model().requests_sent(), 20u);
}

TEST_F(BridgeTest, UniformMock) {
  PipeBridge b(7, [](LineChannel& ch) {
    ch.WriteLine(BridgeHello(7, 0));
    while (auto line = ch.ReadLine()) {
      const auto id = nlohmann::json::parse(*line)["id"].get<std::uint64_t>();
      ch.WriteLine(Probs(id, std::vector<double>(7, 1.0 / 7.0)));
    }
  });
  const auto d = b.model().NextDist(TokenSequence{1, 2});
  EXPECT_NEAR(d.Sum(), 1.0, 1e-9);
  for (std::size_t t = 0; t < 7; ++t) EXPECT_NEAR(d[t], 1.0 / 7.0, 1e-12);
}

TEST_F(BridgeTest, SmallDriftIsRenormalized) {
  PipeBridge b(4, Scripted(4, [](std::uint64_t id) {
                 return Probs(id, {0.25, 0.25, 0.25, 0.25 + 5e-7});
               }));
  const auto d = b.model().NextDist({});
  EXPECT_NEAR(d.Sum(), 1.0, 1e-15);
  EXPECT_NEAR(d[3], (0.25 + 5e-7) / (1.0 + 5e-7), 1e-15);
}

template <typename E>
void ExpectFirstRequestFails(std::size_t v, std::function<std::string(std::uint64_t)> reply,
                             BridgeErrorKind kind) {
  PipeBridge b(v, Scripted(v, std::move(reply)));
  try {
    b.model().NextDist({});
    ADD_FAILURE() << "no error raised";
  } catch (const E& e) {
    EXPECT_EQ(e.kind(), kind);
  }
}

TEST_F(BridgeTest, ErrorKinds) {
  ExpectFirstRequestFails<BridgeNormalizationError>(
      4, [](std::uint64_t id) { return Probs(id, {0.3, 0.2, 0.2, 0.2}); },
      BridgeErrorKind::kNormalization);
  ExpectFirstRequestFails<BridgeNormalizationError>(
      3, [](std::uint64_t id) { return Probs(id, {1.5, -0.5, 0.0}); },
      BridgeErrorKind::kNormalization);
  ExpectFirstRequestFails<BridgeIdMismatchError>(
      2, [](std::uint64_t id) { return Probs(id + 1, {0.5, 0.5}); },
      BridgeErrorKind::kIdMismatch);
  ExpectFirstRequestFails<BridgeMalformedError>(
      2, [](std::uint64_t) { return std::string("{\"id\":0,\"probs\":[0.5,"); },
      BridgeErrorKind::kMalformed);
  ExpectFirstRequestFails<BridgeMalformedError>(
      3, [](std::uint64_t id) { return Probs(id, {0.5, 0.5}); }, BridgeErrorKind::kMalformed);
  ExpectFirstRequestFails<BridgeConnectionError>(
      2, [](std::uint64_t id) { return "{\"id\":" + std::to_string(id) + ",\"error\":\"x\"}"; },
      BridgeErrorKind::kConnection);
}

TEST_F(BridgeTest, ParseResponseDirectly) {
  EXPECT_EQ(ParseBridgeResponse(R"({"id":3,"probs":[0.5,0.5]})", 3, 2)[1], 0.5);
  EXPECT_THROW(ParseBridgeResponse(R"({"id":-1,"probs":[0.5,0.5]})", 0, 2), BridgeMalformedError);
  EXPECT_THROW(ParseBridgeResponse(R"({"probs":[0.5,0.5]})", 0, 2), BridgeMalformedError);
  EXPECT_THROW(ParseBridgeResponse(R"({"id":0,"probs":[0.5,"x"]})", 0, 2),
               BridgeMalformedError);
  EXPECT_THROW(ParseBridgeResponse(R"({"id":0,"probs":[0.9]})", 0, 1),
               BridgeNormalizationError);
}

TEST_F(BridgeTest, Timeout) {
  PipeBridge b(2, [](LineChannel& ch) {
    ch.WriteLine(BridgeHello(2, 0));
    while (ch.ReadLine()) {
    }
  }, milliseconds(100));
  EXPECT_THROW(b.model().NextDist({}), BridgeTimeoutError);
}

TEST_F(BridgeTest, HandshakeErrors) {
  EXPECT_THROW(PipeBridge(5, ServeLocal()), BridgeConnectionError);
  EXPECT_THROW(PipeBridge(2, [](LineChannel& ch) {
                 ch.WriteLine("{\"hi\":1}");
                 while (ch.ReadLine()) {
                 }
               }),
               BridgeMalformedError);
  EXPECT_THROW(PipeBridge(2, [](LineChannel&) {}), BridgeConnectionError);
}

TEST_F(BridgeTest, ThousandSequentialRequests) {
  std::vector<std::uint64_t> seen;
  {
    PipeBridge b(3, [&seen](LineChannel& ch) {
      ch.WriteLine(BridgeHello(3, 1));
      while (auto line = ch.ReadLine()) {
        const auto id = nlohmann::json::parse(*line)["id"].get<std::uint64_t>();
        seen.push_back(id);
        std::vector<double> p(3, 0.0);
        p[id % 3] = 1.0;
        ch.WriteLine(Probs(id, p));
      }
    });
    for (std::uint64_t i = 0; i < 1000; ++i) {
      ASSERT_EQ(b.model().NextDist({}).ArgMax(), i % 3);
    }
  }
  ASSERT_EQ(seen.size(), 1000u);
  for (std::uint64_t i = 0; i < 1000; ++i) EXPECT_EQ(seen[i], i);
}

TEST_F(BridgeTest, BridgedGenerationMatchesInProcess) {
  PipeBridge b(300, ServeLocal());
  const SynthLanguage lang(SynthParams{.vocab_size = 300});
  const auto prompts = lang.Prompts(6, 3, 9);
  GenParams g;
  g.max_len = 60;
  g.stop_at_eos = false;
  g.seed = 31;
  const KgwParams kp{.key = 42};
  const AarParams ap{.key = 42};
  const KgwRule kgw(kp);
  const AarRule aar(ap);
  for (const StepRule* rule : {static_cast<const StepRule*>(&kgw),
                               static_cast<const StepRule*>(&aar)}) {
    const Corpus local = GenerateMany(Local(), prompts, 6, g, *rule, 1);
    const Corpus remote = GenerateMany(b.model(), prompts, 6, g, *rule, 1);
    const KgwDetector kd(kp);
    const AarDetector ad(ap);
    const Detector& det = rule == &kgw ? static_cast<const Detector&>(kd) : ad;
    for (std::size_t i = 0; i < local.size(); ++i) {
      const auto a = det.Detect(local.docs[i].tokens, local.docs[i].prefix);
      const auto r = det.Detect(remote.docs[i].tokens, remote.docs[i].prefix);
      EXPECT_NEAR(a.log10_p, r.log10_p, 1e-9) << rule->name() << " " << i;
    }
  }
}

TEST_F(BridgeTest, ServerAnswersBadRequestsWithErrors) {
  int up[2], down[2];
  ASSERT_EQ(::pipe(up), 0);
  ASSERT_EQ(::pipe(down), 0);
  std::thread server([&] {
    LineChannel ch(up[0], down[1], true);
    ServeModel(Local(), 3, ch);
  });
  {
    LineChannel client(down[0], up[1], true);
    EXPECT_EQ(*client.ReadLine(milliseconds(5000)), BridgeHello(300, 3));
    client.WriteLine("not json");
    auto j = nlohmann::json::parse(*client.ReadLine(milliseconds(5000)));
    EXPECT_TRUE(j["id"].is_null());
    EXPECT_TRUE(j.contains("error"));
    client.WriteLine(R"({"id":4,"context":[300]})");
    j = nlohmann::json::parse(*client.ReadLine(milliseconds(5000)));
    EXPECT_EQ(j["id"], 4);
    EXPECT_TRUE(j.contains("error"));
    EXPECT_FALSE(j.contains("probs"));
    client.WriteLine(R"({"id":5,"context":[7]})");
    j = nlohmann::json::parse(*client.ReadLine(milliseconds(5000)));
    EXPECT_EQ(j["id"], 5);
    EXPECT_EQ(j["probs"].size(), 300u);
  }
  server.join();
}

TEST_F(BridgeTest, Tcp) {
  std::promise<int> port;
  std::thread server([&] {
    ServeTcp(Local(), 3, 0, [&](int p) { port.set_value(p); }, 1);
  });
  const int p = port.get_future().get();
  ASSERT_GT(p, 0);
  {
    const int fd = ConnectTcp("127.0.0.1", p);
    RemoteModel m(fd, fd, 300, milliseconds(5000), true);
    const TokenSequence ctx = {20, 21};
    const auto want = Local().NextDist(ctx);
    const auto got = m.NextDist(ctx);
    for (std::size_t t = 0; t < 300; ++t) EXPECT_NEAR(got[t], want[t], 1e-15);
  }
  server.join();
  EXPECT_THROW(ConnectTcp("127.0.0.1", p), BridgeConnectionError);
}

}  // namespace
}  // namespace wmlab
