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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace wmlab {
namespace {

constexpr double kLog10e = std::numbers::log10e;
constexpr double kLnSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2 pi)
constexpr double kLn2Pi = 1.83787706640934548356;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

constexpr double kEpsilon = 1e-15;
constexpr int kMaxIterations = 10000;

// Terms below this fraction of the largest binomial term cannot move the
// log of the sum by more than ~1e-14 for n up to 1e6.
constexpr double kNegligibleRatio = 1e-22;

constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
constexpr double kLanczosG = 7.0;

void CheckBinomArgs(std::int64_t n, double p) {
  if (n < 0) throw std::invalid_argument("binomial: n must be >= 0");
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("binomial: p must lie in (0, 1), got " +
                                std::to_string(p));
  }
}

// Sum of pmf(k) for k in [lo, hi], anchored at `peak` (which must lie in the
// range): walks outward multiplying term ratios, which keeps every partial
// product in [0, 1] and the relative error at a few ulps per step.
double LogBinomRangeSum(std::int64_t n, double p, std::int64_t lo,
                        std::int64_t hi, std::int64_t peak) {
  const double odds = p / (1.0 - p);
  double sum = 1.0;
  double term = 1.0;
  for (std::int64_t k = peak; k < hi; ++k) {
    term *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
    sum += term;
    if (term < kNegligibleRatio * sum) break;
  }
  term = 1.0;
  for (std::int64_t k = peak; k > lo; --k) {
    term *= static_cast<double>(k) / (odds * static_cast<double>(n - k + 1));
    sum += term;
    if (term < kNegligibleRatio * sum) break;
  }
  return LogBinomPmf(peak, n, p) + std::log(sum);
}

std::int64_t BinomMode(std::int64_t n, double p) {
  const auto mode = static_cast<std::int64_t>(
      std::floor(static_cast<double>(n + 1) * p));
  return std::clamp<std::int64_t>(mode, 0, n);
}

// ln(x^a e^-x / Gamma(a+1)).
double LogGammaKernel(double a, double x) {
  if (a > 15.0) {
    return -StirlingError(a) - DevianceTerm(a, x) - 0.5 * std::log(2.0 * std::numbers::pi * a);
  }
  return a * std::log(x) - x - LogGamma(a + 1.0);
}

// Upper tail of N(0,1) for z > 8: the asymptotic series for the Mills ratio,
// truncated after nine terms (relative error below 2e-9 at z = 8).
double LnNormalUpperAsymptotic(double z) {
  const double inv_z2 = 1.0 / (z * z);
  double series = 1.0;
  double term = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -static_cast<double>(2 * k - 1) * inv_z2;
    series += term;
  }
  return -0.5 * z * z - std::log(z) - kLnSqrt2Pi + std::log(series);
}

double LnNormalUpper(double z) {
  if (z > 8.0) return LnNormalUpperAsymptotic(z);
  if (z < -8.0) return std::log1p(-std::exp(LnNormalUpperAsymptotic(-z)));
  return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
}

}  // namespace

double LogGamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("LogGamma: x must be > 0");
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           LogGamma(1.0 - x);
  }
  x -= 1.0;
  double a = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) {
    a += kLanczos[i] / (x + static_cast<double>(i));
  }
  const double t = x + kLanczosG + 0.5;
  return kLnSqrt2Pi + (x + 0.5) * std::log(t) - t + std::log(a);
}

double StirlingError(double n) {
  if (!(n > 0.0)) throw std::invalid_argument("StirlingError: n must be > 0");
  if (n <= 15.0) {
    return LogGamma(n + 1.0) - (n + 0.5) * std::log(n) + n - kLnSqrt2Pi;
  }
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  const double nn = n * n;
  if (n > 500) return (s0 - s1 / nn) / n;
  if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
  if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

double DevianceTerm(double x, double m) {
  if (std::fabs(x - m) < 0.1 * (x + m)) {
    const double v = (x - m) / (x + m);
    double s = (x - m) * v;
    double ej = 2.0 * x * v;
    const double v2 = v * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v2;
      const double s1 = s + ej / static_cast<double>(2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / m) + m - x;
}

double LogBinomPmf(std::int64_t k, std::int64_t n, double p) {
  CheckBinomArgs(n, p);
  if (k < 0 || k > n) return kNegInf;
  const double q = 1.0 - p;
  if (k == 0) return static_cast<double>(n) * std::log1p(-p);
  if (k == n) return static_cast<double>(n) * std::log(p);
  const auto kd = static_cast<double>(k);
  const auto nd = static_cast<double>(n);
  const double lc = StirlingError(nd) - StirlingError(kd) -
                    StirlingError(nd - kd) - DevianceTerm(kd, nd * p) -
                    DevianceTerm(nd - kd, nd * q);
  const double lf = kLn2Pi + std::log(kd) + std::log1p(-kd / nd);
  return lc - 0.5 * lf;
}

double Log10BinomTail(std::int64_t n, std::int64_t t, double p) {
  CheckBinomArgs(n, p);
  if (t < 0 || t > n) {
    throw std::invalid_argument("Log10BinomTail: need 0 <= t <= n");
  }
  if (t == 0) return 0.0;
  const std::int64_t mode = BinomMode(n, p);
  if (t <= mode) {
    // The tail holds the bulk; go through the complement so that values
    // just below 1 keep their distance from 1.
    const double ln_lower = LogBinomRangeSum(n, p, 0, t - 1, t - 1);
    return std::min(0.0, std::log1p(-std::exp(ln_lower)) * kLog10e);
  }
  return std::min(0.0, LogBinomRangeSum(n, p, t, n, t) * kLog10e);
}

double Log10BinomCdf(std::int64_t n, std::int64_t t, double p) {
  CheckBinomArgs(n, p);
  if (t < -1 || t > n) {
    throw std::invalid_argument("Log10BinomCdf: need -1 <= t <= n");
  }
  if (t == -1) return kNegInf;
  if (t == n) return 0.0;
  const std::int64_t peak = std::min(t, BinomMode(n, p));
  return std::min(0.0, LogBinomRangeSum(n, p, 0, t, peak) * kLog10e);
}

double Log10NormalUpper(double z) {
  if (std::isnan(z)) throw std::invalid_argument("Log10NormalUpper: z is NaN");
  if (z == std::numeric_limits<double>::infinity()) return kNegInf;
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::min(0.0, LnNormalUpper(z) * kLog10e);
}

double Log10GammaUpper(double shape, double x) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw std::invalid_argument("Log10GammaUpper: shape must be > 0");
  }
  if (!(x >= 0.0)) throw std::invalid_argument("Log10GammaUpper: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return kNegInf;

  if (x < shape + 1.0) {
    // P(a, x) = D(a, x) * sum_k x^k / ((a+1)...(a+k)).
    double sum = 1.0;
    double term = 1.0;
    int i = 1;
    for (; i <= kMaxIterations; ++i) {
      term *= x / (shape + static_cast<double>(i));
      sum += term;
      if (term < sum * kEpsilon) break;
    }
    if (i > kMaxIterations) {
      throw ConvergenceError("Log10GammaUpper: series did not converge");
    }
    const double lower = std::exp(LogGammaKernel(shape, x) + std::log(sum));
    return std::min(0.0, std::log1p(-std::min(lower, 1.0)) * kLog10e);
  }

  // Q(a, x) = a D(a, x) / (x + 1 - a - 1(1-a)/(x + 3 - a - ...)), evaluated
  // with the modified Lentz method.
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - shape;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  int i = 1;
  for (; i <= kMaxIterations; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - shape);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) break;
  }
  if (i > kMaxIterations) {
    throw ConvergenceError("Log10GammaUpper: continued fraction did not converge");
  }
  const double ln_q = LogGammaKernel(shape, x) + std::log(shape) + std::log(h);
  return std::min(0.0, ln_q * kLog10e);
}

double KgwZ(std::int64_t green, std::int64_t T, double gamma) {
  if (T < 1) throw std::invalid_argument("KgwZ: T must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("KgwZ: gamma must lie in (0, 1)");
  }
  if (green < 0 || green > T) {
    throw std::invalid_argument("KgwZ: need 0 <= green <= T");
  }
  const auto t = static_cast<double>(T);
  return (static_cast<double>(green) - gamma * t) /
         std::sqrt(t * gamma * (1.0 - gamma));
}

ZTest IpZ(double accuracy, std::int64_t n, double boundary) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw std::invalid_argument("IpZ: accuracy must lie in [0, 1]");
  }
  if (n < 1) throw std::invalid_argument("IpZ: n must be >= 1");
  const double p = 0.5 + boundary;
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("IpZ: 0.5 + boundary must lie in (0, 1)");
  }
  const double z =
      (accuracy - p) / std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  return ZTest{z, Log10NormalUpper(z)};
}

}  // namespace wmlab
