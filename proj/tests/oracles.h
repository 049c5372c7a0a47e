//
// Copyright 2026 The dpjl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPJL_TESTS_ORACLES_H_
#define DPJL_TESTS_ORACLES_H_

// Independent reference computations for tests. Nothing here calls the
// library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "dpjl/rng.h"
#include "dpjl/stats.h"

namespace dpjl::oracle {

// Single-step Gaussian mechanism with shift mu:
//   delta(eps) = Phi(-eps/mu + mu/2) - e^eps Phi(-eps/mu - mu/2).
inline double gaussian_delta(double mu, double eps) {
  return std_normal_cdf(-eps / mu + mu / 2) -
         std::exp(eps) * std_normal_cdf(-eps / mu - mu / 2);
}

// Empirical Neyman-Pearson tradeoff of (Z, N(Z/sigma, 1)) against
// (Z, N(0, 1)) with Z = sqrt(r / chi2_r), r = 0 meaning Z = 1. Returns
// (alpha, beta) at every threshold between sorted log-likelihood ratios.
inline std::vector<std::pair<double, double>> np_monte_carlo(
    double sigma, int r, int n, std::uint64_t seed) {
  RngStream rng(seed, "np-oracle");
  auto draw_z = [&] {
    if (r == 0) return 1.0;
    double w = 0.0;
    for (int k = 0; k < r; ++k) {
      const double g = rng.next_gaussian();
      w += g * g;
    }
    return std::sqrt(r / w);
  };
  std::vector<double> null_llr(n), alt_llr(n);
  for (int i = 0; i < n; ++i) {
    const double mu = draw_z() / sigma;
    const double x = rng.next_gaussian();
    null_llr[i] = mu * x - 0.5 * mu * mu;
  }
  for (int i = 0; i < n; ++i) {
    const double mu = draw_z() / sigma;
    const double x = mu + rng.next_gaussian();
    alt_llr[i] = mu * x - 0.5 * mu * mu;
  }
  std::sort(null_llr.begin(), null_llr.end());
  std::sort(alt_llr.begin(), alt_llr.end());
  // Reject when llr > tau: alpha = P0(llr > tau), beta = P1(llr <= tau).
  std::vector<std::pair<double, double>> out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < null_llr.size(); i += 97) {
    const double tau = null_llr[i];
    while (j < alt_llr.size() && alt_llr[j] <= tau) ++j;
    const double alpha = 1.0 - static_cast<double>(i + 1) / n;
    const double beta = static_cast<double>(j) / n;
    out.emplace_back(alpha, beta);
  }
  return out;
}

// l-infinity distance from (a, b) to the graph of a continuous nonincreasing
// f on [0, 1]: the smallest d whose box around the point meets the graph.
template <typename F>
double graph_distance(const F& f, double a, double b) {
  const auto meets = [&](double d) {
    const double hi = f(std::max(0.0, a - d));
    const double lo = f(std::min(1.0, a + d));
    return lo <= b + d && hi >= b - d;
  };
  double lo = 0.0, hi = 1.0;
  if (meets(0.0)) return 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (meets(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace dpjl::oracle

#endif  // DPJL_TESTS_ORACLES_H_
