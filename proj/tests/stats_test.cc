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

#include "wmlab/stats.h"

#include <cmath>
#include <stdexcept>

#include "gtest/gtest.h"
#include "oracles.h"

namespace wmlab {
namespace {

const double kLog10Half = std::log10(0.5);

// The quadrature oracles must agree with closed forms before they are
// trusted elsewhere.
TEST(OracleTest, QuadratureAgreesWithClosedForms) {
  EXPECT_NEAR(kLog10Half, oracle::Log10NormalUpperQuadrature(0.0), 1e-14);
  EXPECT_NEAR(std::log10(std::erfc(3.0 / std::sqrt(2.0)) / 2),
              oracle::Log10NormalUpperQuadrature(3.0), 1e-13);
  for (int n : {1, 5, 40}) {
    for (double x : {0.3, 1.0 * n, 3.0 * n}) {
      EXPECT_NEAR(oracle::Log10ErlangUpper(n, x),
                  oracle::Log10GammaUpperQuadrature(n, x), 1e-13)
          << n << " " << x;
    }
  }
}

TEST(LogGammaTest, MatchesStdLgamma) {
  for (double x : {0.1, 0.5, 1.0, 1.5, 2.0, 7.3, 50.0, 1000.0, 1e5}) {
    EXPECT_NEAR(std::lgamma(x), LogGamma(x), 1e-12 * std::max(1.0, std::lgamma(x)))
        << x;
  }
  EXPECT_THROW(LogGamma(0.0), std::invalid_argument);
}

TEST(BinomTailTest, Examples) {
  EXPECT_EQ(0.0, Log10BinomTail(10, 0, 0.3));
  EXPECT_NEAR(kLog10Half, Log10BinomTail(1, 1, 0.5), 1e-12);
  const double oracle = oracle::Log10OfRational(oracle::BinomTailExact(200, 66, 1, 100));
  EXPECT_NEAR(oracle, Log10BinomTail(200, 66, 0.01), 1e-9);
}

TEST(BinomTailTest, ExactRationalGrid) {
  struct P { std::int64_t num, den; };
  for (P p : {P{1, 100}, P{1, 4}, P{1, 2}, P{7, 10}}) {
    const double p0 = static_cast<double>(p.num) / p.den;
    for (std::int64_t n : {1, 7, 60, 200}) {
      for (std::int64_t t : {std::int64_t{0}, std::int64_t{1}, n / 3, n / 2, n}) {
        const double want =
            oracle::Log10OfRational(oracle::BinomTailExact(n, t, p.num, p.den));
        EXPECT_NEAR(want, Log10BinomTail(n, t, p0), 1e-9)
            << "n=" << n << " t=" << t << " p=" << p0;
      }
    }
  }
}

TEST(BinomTailTest, StrictlyDecreasingInT) {
  for (double p0 : {0.01, 0.25, 0.9}) {
    double prev = Log10BinomTail(300, 0, p0);
    for (std::int64_t t = 1; t <= 300; ++t) {
      const double cur = Log10BinomTail(300, t, p0);
      ASSERT_LT(cur, prev) << "t=" << t << " p=" << p0;
      ASSERT_TRUE(std::isfinite(cur));
      prev = cur;
    }
  }
}

TEST(BinomTailTest, ComplementsCdf) {
  for (std::int64_t n = 1; n <= 60; n += 7) {
    for (std::int64_t t = 0; t <= n; ++t) {
      const double tail = std::pow(10.0, Log10BinomTail(n, t, 0.3));
      const double lower = std::pow(10.0, Log10BinomCdf(n, t - 1, 0.3));
      EXPECT_NEAR(1.0, tail + lower, 1e-12) << n << " " << t;
      const double exact =
          oracle::Log10OfRational(oracle::BinomCdfExact(n, t - 1, 3, 10));
      if (t > 0) EXPECT_NEAR(exact, Log10BinomCdf(n, t - 1, 0.3), 1e-9);
    }
  }
}

TEST(BinomTailTest, LargeN) {
  // Far in the tail for N = 10^6; compare against the leading terms summed
  // directly in log space with std::lgamma.
  const std::int64_t n = 1000000, t = 12000;
  const double p = 0.01;
  double m = -INFINITY;
  std::vector<double> terms;
  for (std::int64_t k = t; k < t + 3000; ++k) {
    terms.push_back(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                    std::lgamma(n - k + 1.0) + k * std::log(p) +
                    (n - k) * std::log1p(-p));
    m = std::max(m, terms.back());
  }
  double s = 0;
  for (double x : terms) s += std::exp(x - m);
  // lgamma at 1e6 carries about 1e-10 absolute error per call.
  EXPECT_NEAR((m + std::log(s)) / std::log(10.0), Log10BinomTail(n, t, p), 1e-8);
}

TEST(BinomTailTest, DomainErrors) {
  EXPECT_THROW(Log10BinomTail(10, 11, 0.5), std::invalid_argument);
  EXPECT_THROW(Log10BinomTail(10, -1, 0.5), std::invalid_argument);
  EXPECT_THROW(Log10BinomTail(10, 3, 0.0), std::invalid_argument);
  EXPECT_THROW(Log10BinomTail(10, 3, 1.0), std::invalid_argument);
}

TEST(NormalUpperTest, Examples) {
  EXPECT_NEAR(kLog10Half, Log10NormalUpper(0.0), 1e-15);
  const double low = Log10NormalUpper(-10.0);
  EXPECT_LE(low, 0.0);
  EXPECT_GT(low, -1e-20);
  const double want = oracle::Log10NormalUpperQuadrature(40.0);
  EXPECT_NEAR(want, Log10NormalUpper(40.0), 1e-6 * std::abs(want));
}

TEST(NormalUpperTest, QuadratureUpTo200) {
  for (double z : {-5.0, -1.0, 0.5, 3.0, 7.9, 8.0, 8.1, 9.0, 12.0, 20.0, 50.0,
                   100.0, 200.0}) {
    const double want = oracle::Log10NormalUpperQuadrature(z);
    EXPECT_NEAR(want, Log10NormalUpper(z), 1e-6 * std::max(1e-300, std::abs(want)))
        << z;
  }
}

TEST(NormalUpperTest, StrictlyDecreasing) {
  double prev = Log10NormalUpper(-20.0);
  for (double z = -19.75; z <= 200.0; z += 0.25) {
    const double cur = Log10NormalUpper(z);
    ASSERT_LT(cur, prev) << z;
    prev = cur;
  }
}

TEST(GammaUpperTest, Examples) {
  EXPECT_EQ(0.0, Log10GammaUpper(3.0, 0.0));
  EXPECT_NEAR(-2.0 / std::log(10.0), Log10GammaUpper(1.0, 2.0), 1e-14);
  EXPECT_NEAR(std::log10(61.0) - 10.0 / std::log(10.0), Log10GammaUpper(3, 10),
              1e-12);
  EXPECT_NEAR(oracle::Log10ErlangUpper(3, 10.0), Log10GammaUpper(3, 10), 1e-12);
}

TEST(GammaUpperTest, ErlangGrid) {
  for (int n = 1; n <= 50; n += 7) {
    for (double x : {0.01, 0.5, 1.0, n * 0.5, n * 1.0, n + 1.0, n * 2.0,
                     n * 5.0 + 30.0, 700.0}) {
      EXPECT_NEAR(oracle::Log10ErlangUpper(n, x), Log10GammaUpper(n, x), 1e-12)
          << "n=" << n << " x=" << x;
    }
  }
}

TEST(GammaUpperTest, QuadratureGrid) {
  for (double n : {0.5, 2.5, 100.0, 2000.0, 10000.0}) {
    for (double ratio : {0.5, 0.9, 1.0, 1.2, 2.0}) {
      const double x = n * ratio;
      const double want = oracle::Log10GammaUpperQuadrature(n, x);
      EXPECT_NEAR(want, Log10GammaUpper(n, x), 1e-6 * std::max(1.0, std::abs(want)))
          << "n=" << n << " x=" << x;
    }
  }
}

// For large shapes and small x, 1 - Q is below the smallest subnormal, so
// log10 Q rounds to 0 and consecutive values can only tie.
TEST(GammaUpperTest, StrictlyDecreasingInX) {
  for (double n : {1.0, 10.0, 500.0}) {
    double prev = Log10GammaUpper(n, 0.0);
    for (double x = 0.5; x < 4 * n + 50; x += 0.5) {
      const double cur = Log10GammaUpper(n, x);
      if (prev == 0.0 && cur == 0.0) continue;
      ASSERT_LT(cur, prev) << n << " " << x;
      ASSERT_TRUE(std::isfinite(cur));
      prev = cur;
    }
  }
}

TEST(GammaUpperTest, DomainErrors) {
  EXPECT_THROW(Log10GammaUpper(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(Log10GammaUpper(1.0, -1.0), std::invalid_argument);
}

TEST(KgwZTest, Examples) {
  EXPECT_DOUBLE_EQ(0.0, KgwZ(25, 100, 0.25));
  EXPECT_NEAR(17.3205, KgwZ(100, 100, 0.25), 1e-4);
  EXPECT_NEAR(-5.7735, KgwZ(0, 100, 0.25), 1e-4);
  EXPECT_THROW(KgwZ(5, 0, 0.25), std::invalid_argument);
  EXPECT_THROW(KgwZ(101, 100, 0.25), std::invalid_argument);
  EXPECT_THROW(KgwZ(1, 100, 1.0), std::invalid_argument);
}

TEST(IpZTest, Examples) {
  const ZTest center = IpZ(0.55, 100, 0.05);
  EXPECT_NEAR(0.0, center.z, 1e-12);
  EXPECT_NEAR(kLog10Half, center.log10_p, 1e-12);
  EXPECT_NEAR(0.35 / std::sqrt(0.55 * 0.45 / 100), IpZ(0.9, 100, 0.05).z, 1e-12);
  EXPECT_NEAR(7.0352, IpZ(0.9, 100, 0.05).z, 1e-4);
  EXPECT_NEAR(0.9045, IpZ(1.0, 1, 0.05).z, 1e-4);
  EXPECT_THROW(IpZ(0.5, 10, 0.5), std::invalid_argument);
  EXPECT_THROW(IpZ(1.5, 10, 0.05), std::invalid_argument);
}

}  // namespace
}  // namespace wmlab
