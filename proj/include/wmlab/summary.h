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

// Descriptive statistics for experiment reports.

#ifndef WMLAB_SUMMARY_H_
#define WMLAB_SUMMARY_H_

#include <span>

namespace wmlab {

// Linear-interpolation quantile (q in [0, 1]) of a non-empty sample.
double Quantile(std::span<const double> values, double q);
double Median(std::span<const double> values);
// Q(0.75) - Q(0.25).
double Iqr(std::span<const double> values);
double Mean(std::span<const double> values);

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either side is constant.
double Spearman(std::span<const double> x, std::span<const double> y);

// sup |F_n(u) - u| for a sample that should be Uniform(0, 1).
double KsUniformDistance(std::span<const double> sample);
// Asymptotic Kolmogorov p-value for distance d and sample size n.
double KsPValue(double d, std::size_t n);

}  // namespace wmlab

#endif  // WMLAB_SUMMARY_H_
