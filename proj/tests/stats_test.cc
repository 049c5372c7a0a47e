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

#include "dpjl/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dpjl/rng.h"
#include "gtest/gtest.h"

namespace dpjl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(NormalTest, CdfBasics) {
  EXPECT_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_EQ(std_normal_cdf(kInf), 1.0);
  EXPECT_EQ(std_normal_cdf(-kInf), 0.0);
  EXPECT_NEAR(std_normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_THROW(std_normal_cdf(std::nan("")), std::invalid_argument);
}

TEST(NormalTest, CdfDeepTail) {
  // mpmath reference at 40 digits.
  EXPECT_NEAR(std_normal_cdf(-37.0) / 5.725571222524576822e-300, 1.0, 1e-12);
  EXPECT_NEAR(log_std_normal_cdf(-40.0), -804.60844201375378817, 1e-9);
  EXPECT_NEAR(log_std_normal_cdf(-3.0), -6.6077262215105495433, 1e-12);
}

TEST(NormalTest, CdfMonotoneOnGrid) {
  double prev = 0.0;
  for (double x = -40.0; x <= 10.0; x += 1e-3) {
    const double c = std_normal_cdf(x);
    ASSERT_GE(c, prev);
    prev = c;
  }
}

TEST(NormalTest, InverseCdf) {
  EXPECT_EQ(std_normal_inv_cdf(0.5), 0.0);
  // Independent inversion of the CDF by bisection.
  double lo = 0.0, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std_normal_cdf(mid) < 0.975 ? lo : hi) = mid;
  }
  EXPECT_NEAR(std_normal_inv_cdf(0.975), 0.5 * (lo + hi), 1e-9);
  EXPECT_THROW(std_normal_inv_cdf(0.0), std::invalid_argument);
  EXPECT_THROW(std_normal_inv_cdf(1.0), std::invalid_argument);
}

TEST(NormalTest, InverseRoundTrip) {
  for (double p : {1e-300, 1e-100, 1e-20, 1e-10, 1e-5, 0.01, 0.1, 0.3, 0.5,
                   0.7, 0.9, 0.99, 1.0 - 1e-5, 1.0 - 1e-10}) {
    const double x = std_normal_inv_cdf(p);
    EXPECT_NEAR(std_normal_cdf(x), p, 1e-12 * std::max(1.0, 0.0)) << p;
    if (p < 0.5) EXPECT_NEAR(std_normal_cdf(x) / p, 1.0, 1e-12) << p;
  }
}

TEST(Chi2Test, ExponentialSpecialCase) {
  for (double p : {1e-9, 1e-3, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-9}) {
    const double want = -2.0 * std::log1p(-p);
    EXPECT_NEAR(chi2_quantile(2, p) / want, 1.0, 1e-10) << p;
  }
}

TEST(Chi2Test, OneDegreeFromNormal) {
  const double p = 2.0 * std_normal_cdf(1.0) - 1.0;
  EXPECT_NEAR(chi2_quantile(1, p), 1.0, 1e-10);
  EXPECT_NEAR(chi2_quantile(1, 0.6826894921), 1.0, 1e-6);
}

TEST(Chi2Test, FrozenQuantiles) {
  // scipy.stats.chi2.ppf values.
  EXPECT_NEAR(chi2_quantile(5, 0.5) / 4.351460191095526, 1.0, 1e-10);
  EXPECT_NEAR(chi2_quantile(1, 1e-12) / 1.5707963267948931e-24, 1.0, 1e-9);
  EXPECT_NEAR(chi2_quantile(30, 1.0 - 1e-12) / 120.052092067524, 1.0, 1e-10);
  EXPECT_NEAR(chi2_quantile(30, 1e-12) / 2.1792731865592656, 1.0, 1e-10);
}

TEST(Chi2Test, QuantileInvertsCdf) {
  for (int r : {1, 2, 3, 5, 10, 30, 100, 10000}) {
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.8, 0.99, 1.0 - 1e-9}) {
      const double q = chi2_quantile(r, p);
      if (p <= 0.5) {
        EXPECT_NEAR(chi2_cdf(r, q) / p, 1.0, 1e-10) << r << " " << p;
      } else {
        EXPECT_NEAR(chi2_sf(r, q) / (1.0 - p), 1.0, 1e-8) << r << " " << p;
      }
    }
  }
  EXPECT_THROW(chi2_quantile(3, 0.0), std::invalid_argument);
  EXPECT_THROW(chi2_quantile(3, 1.0), std::invalid_argument);
}

TEST(Chi2Test, MonteCarloMedian) {
  RngStream s(11, "chi2-median");
  std::vector<double> w(10000000);
  for (double& x : w) {
    double acc = 0.0;
    for (int k = 0; k < 5; ++k) {
      const double g = s.next_gaussian();
      acc += g * g;
    }
    x = acc;
  }
  std::nth_element(w.begin(), w.begin() + w.size() / 2, w.end());
  EXPECT_NEAR(chi2_quantile(5, 0.5) / w[w.size() / 2], 1.0, 0.005);
}

TEST(QuadratureTest, Constant) {
  for (int r : {1, 3, 30}) {
    const ChiExpectation e = expectation_over_chi(r, [](double) { return 2.5; });
    EXPECT_NEAR(e.value, 2.5, 2.5e-11);
    EXPECT_LE(e.truncation_mass, 2e-12);
  }
}

TEST(QuadratureTest, InverseChiMoment) {
  // z^2 is unbounded as W -> 0, so the default lower cut at 1e-12 drops
  // about 4e-4 of the moment. A deeper cut brings the dropped part to 1e-12.
  QuadratureSpec spec;
  spec.lower_quantile = 1e-36;
  const ChiExpectation e =
      expectation_over_chi(3, [](double z) { return z * z; }, spec);
  EXPECT_NEAR(e.value, 3.0, 1e-6);
}

TEST(QuadratureTest, PhiIntegrandAgainstReferences) {
  const ChiExpectation e = expectation_over_chi(
      10, [](double z) { return std_normal_cdf(-z / 2.0); });
  // mpmath reference integral.
  EXPECT_NEAR(e.value, 0.29581317044019089577, 1e-9);
  // Monte Carlo oracle, 1e7 draws.
  RngStream s(12, "chi-mc");
  const int n = 10000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double g = s.next_gaussian();
      w += g * g;
    }
    const double v = std_normal_cdf(-std::sqrt(10.0 / w) / 2.0);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(e.value - mean), 3.0 * se);
}

TEST(QuadratureTest, ValidatesSpec) {
  QuadratureSpec bad;
  bad.lower_quantile = 0.0;
  EXPECT_THROW(expectation_over_chi(3, [](double) { return 1.0; }, bad),
               std::invalid_argument);
  bad = QuadratureSpec{};
  bad.lower_quantile = 0.6;
  bad.upper_quantile = 0.4;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(QuadratureTest, NonConvergenceCarriesEstimate) {
  QuadratureSpec spec;
  spec.max_panels = 20;
  spec.relative_tolerance = 1e-15;
  try {
    expectation_over_chi(
        1, [](double z) { return std::sin(50.0 * z) > 0 ? 1.0 : 0.0; }, spec);
    FAIL() << "expected QuadratureError";
  } catch (const QuadratureError& e) {
    EXPECT_GT(e.bound(), 0.0);
    EXPECT_TRUE(std::isfinite(e.estimate()));
  }
}

TEST(QuadratureTest, ChiRuleMatchesAdaptive) {
  const auto g = [](double z) { return std_normal_cdf(-z / 2.0); };
  for (int r : {1, 5, 30}) {
    const ChiRule rule = make_chi_rule(r, QuadratureSpec{});
    double s = 0.0;
    for (std::size_t i = 0; i < rule.z.size(); ++i) s += rule.weight[i] * g(rule.z[i]);
    EXPECT_NEAR(s, expectation_over_chi(r, g).value, 1e-9) << r;
  }
}

TEST(QuadratureTest, GaussLegendreIntegratesPolynomials) {
  std::vector<double> x, w;
  gauss_legendre(10, x, w);
  double s = 0.0;
  for (int i = 0; i < 10; ++i) s += w[i] * std::pow(x[i], 18);
  EXPECT_NEAR(s, 2.0 / 19.0, 1e-14);
}

}  // namespace
}  // namespace dpjl
