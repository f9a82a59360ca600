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

// Reference implementations used only by tests. None of them share code
// with src/stats.cc: tails are evaluated with exact rationals or with
// 50-digit quadrature.

#ifndef WMLAB_TESTS_ORACLES_H_
#define WMLAB_TESTS_ORACLES_H_

#include <cmath>
#include <cstdint>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace wmlab::oracle {

using Big = boost::multiprecision::cpp_bin_float_50;
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double Log10OfRational(const Rational& q) {
  using boost::multiprecision::cpp_bin_float_100;
  const cpp_bin_float_100 num(boost::multiprecision::numerator(q));
  const cpp_bin_float_100 den(boost::multiprecision::denominator(q));
  return static_cast<double>(log10(num) - log10(den));
}

// Exact P(X >= t) for X ~ Binomial(n, num/den).
inline Rational BinomTailExact(std::int64_t n, std::int64_t t, std::int64_t num,
                               std::int64_t den) {
  // Sum of C(n,k) num^k (den-num)^(n-k) over k >= t, divided by den^n.
  BigInt sum = 0;
  BigInt choose = 1;  // C(n, k)
  for (std::int64_t k = 0; k <= n; ++k) {
    if (k > 0) choose = choose * (n - k + 1) / k;
    if (k >= t) {
      sum += choose * boost::multiprecision::pow(BigInt(num), k) *
             boost::multiprecision::pow(BigInt(den - num), n - k);
    }
  }
  return Rational{sum, boost::multiprecision::pow(BigInt(den), n)};
}

// Exact P(X <= t); t = -1 gives 0.
inline Rational BinomCdfExact(std::int64_t n, std::int64_t t, std::int64_t num,
                              std::int64_t den) {
  return Rational(1) - BinomTailExact(n, t + 1, num, den);
}

// Q(n, x) for integer n: e^{-x} sum_{k<n} x^k / k!, in 50 digits.
inline double Log10ErlangUpper(int n, double x) {
  const Big bx(x);
  Big term = 1, sum = 0;
  for (int k = 0; k < n; ++k) {
    if (k > 0) term = term * bx / k;
    sum += term;
  }
  return static_cast<double>(log10(sum) - bx / log(Big(10)));
}

// ln of integral over [a, inf) of exp(g(u)) where g is concave with its
// maximum at `peak` (>= a) and curvature scale `width`. Integrates in
// segments of one width until the integrand drops below e^-80 of the peak.
template <typename LogDensity>
Big LogIntegralToInfinity(LogDensity&& g, Big a, Big peak, Big width) {
  using boost::math::quadrature::gauss_kronrod;
  const Big top = g(peak);
  auto f = [&](const Big& u) { return exp(g(u) - top); };
  Big total = 0;
  Big lo = a;
  // Left of the peak.
  while (lo < peak) {
    const Big hi = std::min<Big>(lo + width, peak);
    total += gauss_kronrod<Big, 31>::integrate(f, lo, hi, 12, Big(1e-30));
    lo = hi;
  }
  for (int guard = 0; guard < 100000; ++guard) {
    const Big hi = lo + width;
    total += gauss_kronrod<Big, 31>::integrate(f, lo, hi, 12, Big(1e-30));
    lo = hi;
    if (g(lo) - top < -80) break;
  }
  return top + log(total);
}

// log10 of Q(shape, x) by direct quadrature of t^{n-1} e^{-t} / Gamma(n).
inline double Log10GammaUpperQuadrature(double shape, double x) {
  const Big n(shape);
  const Big bx(x);
  auto g = [&](const Big& t) { return (n - 1) * log(t) - t; };
  const Big mode = n > 1 ? n - 1 : Big(0);
  const Big peak = mode > bx ? mode : bx;
  const Big width = sqrt(n) + 1;
  const Big ln_q =
      LogIntegralToInfinity(g, bx, peak, width) - boost::math::lgamma(n);
  return static_cast<double>(ln_q / log(Big(10)));
}

// log10 of P(Z > z) by quadrature of the standard normal density.
inline double Log10NormalUpperQuadrature(double z) {
  const Big bz(z);
  const Big half_ln_2pi = log(2 * boost::math::constants::pi<Big>()) / 2;
  auto g = [&](const Big& t) { return -t * t / 2 - half_ln_2pi; };
  const Big peak = bz > 0 ? bz : Big(0);
  const Big width = bz > 1 ? Big(1) / bz : Big(1);
  const Big ln_q = LogIntegralToInfinity(g, bz, peak, width);
  return static_cast<double>(ln_q / log(Big(10)));
}

}  // namespace wmlab::oracle

#endif  // WMLAB_TESTS_ORACLES_H_
