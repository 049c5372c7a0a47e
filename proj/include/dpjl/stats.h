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

#ifndef DPJL_STATS_H_
#define DPJL_STATS_H_

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpjl {

// Standard normal CDF via erfc; accurate in both tails down to ~1e-300.
// Throws std::invalid_argument on NaN.
double std_normal_cdf(double x);
// log Phi(x), finite for every finite x.
double log_std_normal_cdf(double x);
double std_normal_pdf(double x);
// Inverse of std_normal_cdf on (0, 1). Throws std::invalid_argument
// outside the open interval.
double std_normal_inv_cdf(double p);

// P[chi2_r <= x] and its complement, r may be any positive real.
double chi2_cdf(double r, double x);
double chi2_sf(double r, double x);
double chi2_log_pdf(double r, double x);
// q with P[chi2_r <= q] = p. Requires r >= 1 and p in (0, 1).
double chi2_quantile(double r, double p);

struct QuadratureSpec {
  double relative_tolerance = 1e-9;
  double lower_quantile = 1e-12;
  double upper_quantile = 1.0 - 1e-12;
  int max_panels = 4000;

  // Throws std::invalid_argument when the quantiles are not strictly
  // inside (0, 1) and ordered, or the tolerance is not positive.
  void validate() const;
};

struct ChiExpectation {
  double value = 0.0;
  // Probability mass of W outside the truncation quantiles. The integrand
  // is not evaluated there; the true expectation differs from `value` by
  // at most truncation_mass * sup|integrand| plus error_bound.
  double truncation_mass = 0.0;
  double error_bound = 0.0;
  int panels = 0;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate, double bound)
      : std::runtime_error(what), estimate_(estimate), bound_(bound) {}
  double estimate() const { return estimate_; }
  double bound() const { return bound_; }

 private:
  double estimate_;
  double bound_;
};

// E[g(Z)] for Z = sqrt(r / W), W ~ chi2_r, by adaptive Gauss-Legendre
// panels in W between the truncation quantiles. `g` must be bounded.
ChiExpectation expectation_over_chi(
    int r, const std::function<double(double)>& integrand,
    const QuadratureSpec& spec = {});

// Fixed node set for the same expectation, for callers that evaluate many
// integrands against one law. Weights sum to one; the truncated mass is
// reported separately.
struct ChiRule {
  std::vector<double> z;
  std::vector<double> weight;
  double truncation_mass = 0.0;
};

// Panels start at chi2 quantiles (decades in both tails, deciles in the
// bulk); each is split into `subdivisions` pieces with `order`-point
// Gauss-Legendre.
ChiRule make_chi_rule(int r, const QuadratureSpec& spec, int subdivisions = 2,
                      int order = 12);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights);

}  // namespace dpjl

#endif  // DPJL_STATS_H_
