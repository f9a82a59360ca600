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

// Log-space tail probabilities for every detector in the library.
//
// All p-values are reported as log10 so that tails far below the smallest
// double (1e-308) stay representable. Every function is one-sided (upper
// tail) unless its name says otherwise, and every output is <= 0.
//
// Domain violations throw std::invalid_argument.

#ifndef WMLAB_STATS_H_
#define WMLAB_STATS_H_

#include <cstdint>
#include <stdexcept>

namespace wmlab {

// Iterative routines that fail to converge within their budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ln Gamma(x) for x > 0 via the Lanczos approximation with g = 7 and the
// nine coefficients
//   0.99999999999980993, 676.5203681218851, -1259.1392167224028,
//   771.32342877765313, -176.61502916214059, 12.507343278686905,
//   -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7.
double LogGamma(double x);

// Stirling remainder ln Gamma(n+1) - (n+1/2) ln n + n - ln sqrt(2 pi), n > 0.
double StirlingError(double n);

// x ln(x/m) + m - x, evaluated without cancellation when x is close to m.
double DevianceTerm(double x, double m);

// ln P(X = k) for X ~ Binomial(n, p), via the saddle-point form.
double LogBinomPmf(std::int64_t k, std::int64_t n, double p);

// log10 P(X >= t), X ~ Binomial(n, p). 0 <= t <= n, 0 < p < 1.
double Log10BinomTail(std::int64_t n, std::int64_t t, double p);

// log10 P(X <= t), X ~ Binomial(n, p). -1 <= t <= n (t = -1 gives -inf).
double Log10BinomCdf(std::int64_t n, std::int64_t t, double p);

// log10 of the standard normal upper tail Q(z) = P(Z > z).
double Log10NormalUpper(double z);

// log10 of the regularized upper incomplete gamma Q(shape, x), which is the
// upper tail of a Gamma(shape, 1) variable at x. shape > 0, x >= 0.
double Log10GammaUpper(double shape, double x);

// z = (green - gamma T) / sqrt(T gamma (1 - gamma)).
double KgwZ(std::int64_t green, std::int64_t T, double gamma);

struct ZTest {
  double z;
  double log10_p;
};

// Accuracy-above-chance test for IP infringement. The null accuracy is
// 0.5 + boundary; z = (accuracy - p) / sqrt(p (1 - p) / n).
ZTest IpZ(double accuracy, std::int64_t n, double boundary);

}  // namespace wmlab

#endif  // WMLAB_STATS_H_
