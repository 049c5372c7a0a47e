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
#include <map>
#include <mutex>
#include <numbers>
#include <queue>

#include <unsupported/Eigen/SpecialFunctions>

namespace dpjl {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Wichura's AS 241 (PPND16), about 1e-16 relative before refinement.
double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

double gamma_log_density(double a, double y) {
  return (a - 1.0) * std::log(y) - y - std::lgamma(a);
}

}  // namespace

double std_normal_cdf(double x) {
  if (std::isnan(x)) throw std::invalid_argument("std_normal_cdf: NaN input");
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

double log_std_normal_cdf(double x) {
  if (std::isnan(x)) {
    throw std::invalid_argument("log_std_normal_cdf: NaN input");
  }
  if (x > -30.0) return std::log(std_normal_cdf(x));
  // Asymptotic series for the Mills ratio.
  const double x2 = x * x;
  const double s = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - kLogSqrt2Pi + std::log(s);
}

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double std_normal_inv_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("std_normal_inv_cdf: p must lie in (0, 1)");
  }
  if (p > 0.5) return -std_normal_inv_cdf(1.0 - p);  // 1 - p is exact here
  double x = ppnd16(p);
  // Halley refinement against the lower-tail CDF.
  for (int it = 0; it < 2; ++it) {
    const double pdf = std_normal_pdf(x);
    if (pdf == 0.0) break;
    const double e = (std_normal_cdf(x) - p) / pdf;
    x -= e / (1.0 + 0.5 * x * e);
  }
  return x;
}

double chi2_cdf(double r, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return Eigen::numext::igamma(0.5 * r, 0.5 * x);
}

double chi2_sf(double r, double x) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return Eigen::numext::igammac(0.5 * r, 0.5 * x);
}

double chi2_log_pdf(double r, double x) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  const double a = 0.5 * r;
  return gamma_log_density(a, 0.5 * x) - std::numbers::ln2;
}

double chi2_quantile(double r, double p) {
  if (!(r >= 1.0)) throw std::invalid_argument("chi2_quantile: r must be >= 1");
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("chi2_quantile: p must lie in (0, 1)");
  }
  const double a = 0.5 * r;
  const bool upper = p > 0.5;
  const double target = upper ? 1.0 - p : p;

  // Residual in the tail that keeps full relative precision.
  auto residual = [&](double u) {
    const double y = std::exp(u);
    return upper ? Eigen::numext::igammac(a, y) - target
                 : Eigen::numext::igamma(a, y) - target;
  };

  // Wilson-Hilferty start, with the small-y series for the far lower tail.
  const double z = std_normal_inv_cdf(p);
  const double h = 2.0 / (9.0 * r);
  double x0 = r * std::pow(std::max(1.0 - h + z * std::sqrt(h), 1e-3), 3.0);
  if (p < 0.05) {
    const double series =
        2.0 * std::exp((std::log(p) + std::lgamma(a + 1.0)) / a);
    if (series < x0) x0 = series;
  }
  double u = std::log(0.5 * x0);

  // Bracket in u = log(y); the residual is monotone in u.
  double lo = u, hi = u;
  const double sign = upper ? -1.0 : 1.0;  // residual increasing iff !upper
  while (sign * residual(lo) > 0.0) lo -= 2.0;
  while (sign * residual(hi) < 0.0) hi += 2.0;

  for (int it = 0; it < 300; ++it) {
    const double f = residual(u);
    if (f == 0.0) break;
    if (sign * f > 0.0) hi = u; else lo = u;
    const double dens = std::exp(gamma_log_density(a, std::exp(u)) + u);
    double next = u - sign * f / dens;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-15 * std::max(1.0, std::abs(u))) {
      u = next;
      break;
    }
    u = next;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(u))) break;
  }
  return 2.0 * std::exp(u);
}

void QuadratureSpec::validate() const {
  if (!(lower_quantile > 0.0 && lower_quantile < upper_quantile &&
        upper_quantile < 1.0)) {
    throw std::invalid_argument(
        "QuadratureSpec: truncation quantiles must satisfy 0 < lo < hi < 1");
  }
  if (!(relative_tolerance > 0.0)) {
    throw std::invalid_argument("QuadratureSpec: tolerance must be positive");
  }
  if (max_panels < 1) {
    throw std::invalid_argument("QuadratureSpec: max_panels must be >= 1");
  }
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = -z;
      x[n - 1 - i] = z;
      w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    it = cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first;
  }
  nodes = it->second.first;
  weights = it->second.second;
}

namespace {

// Initial panel edges in W: chi2 quantiles at decades in both tails and
// deciles in the bulk.
std::vector<double> initial_edges(int r, const QuadratureSpec& spec) {
  std::vector<double> probs;
  probs.push_back(spec.lower_quantile);
  for (double q = 1e-11; q < 0.01; q *= 10.0) {
    if (q > spec.lower_quantile) probs.push_back(q);
  }
  for (double q : {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
                   0.95, 0.99}) {
    probs.push_back(q);
  }
  for (double q = 1e-3; q > 1e-11 * 0.99; q /= 10.0) {
    if (1.0 - q < spec.upper_quantile) probs.push_back(1.0 - q);
  }
  probs.push_back(spec.upper_quantile);
  std::sort(probs.begin(), probs.end());
  probs.erase(std::unique(probs.begin(), probs.end()), probs.end());

  std::vector<double> edges;
  for (double q : probs) {
    const double w = chi2_quantile(r, q);
    if (edges.empty() || w > edges.back()) edges.push_back(w);
  }
  return edges;
}

double split_point(double a, double b) {
  return (a > 0.0 && b > 4.0 * a) ? std::sqrt(a * b) : 0.5 * (a + b);
}

struct Panel {
  double a, b;
  double value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace

ChiExpectation expectation_over_chi(
    int r, const std::function<double(double)>& integrand,
    const QuadratureSpec& spec) {
  if (r < 1) throw std::invalid_argument("expectation_over_chi: r must be >= 1");
  spec.validate();

  std::vector<double> gx, gw;
  gauss_legendre(10, gx, gw);
  const double dof = r;

  auto rule = [&](double a, double b) {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t k = 0; k < gx.size(); ++k) {
      const double w = mid + half * gx[k];
      s += gw[k] * integrand(std::sqrt(dof / w)) *
           std::exp(chi2_log_pdf(dof, w));
    }
    return s * half;
  };
  auto make_panel = [&](double a, double b) {
    const double whole = rule(a, b);
    const double m = split_point(a, b);
    const double halves = rule(a, m) + rule(m, b);
    return Panel{a, b, halves, std::abs(halves - whole)};
  };

  const std::vector<double> edges = initial_edges(r, spec);
  std::priority_queue<Panel> queue;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    queue.push(make_panel(edges[i], edges[i + 1]));
  }

  auto totals = [&](double& value, double& error) {
    std::vector<Panel> all;
    auto copy = queue;
    while (!copy.empty()) {
      all.push_back(copy.top());
      copy.pop();
    }
    std::sort(all.begin(), all.end(),
              [](const Panel& x, const Panel& y) { return x.a < y.a; });
    value = 0.0;
    error = 0.0;
    for (const Panel& p : all) {
      value += p.value;
      error += p.error;
    }
  };

  double value = 0.0, error = 0.0;
  double running_value = 0.0, running_error = 0.0;
  {
    auto copy = queue;
    while (!copy.empty()) {
      running_value += copy.top().value;
      running_error += copy.top().error;
      copy.pop();
    }
  }
  ChiExpectation out;
  out.truncation_mass = spec.lower_quantile + (1.0 - spec.upper_quantile);
  for (;;) {
    const double allowed = spec.relative_tolerance * std::abs(running_value);
    if (running_error <= allowed || running_error < 1e-300) break;
    if (static_cast<int>(queue.size()) >= spec.max_panels) {
      totals(value, error);
      throw QuadratureError(
          "expectation_over_chi: no convergence within max_panels", value,
          error + out.truncation_mass);
    }
    const Panel worst = queue.top();
    queue.pop();
    const double m = split_point(worst.a, worst.b);
    const Panel left = make_panel(worst.a, m);
    const Panel right = make_panel(m, worst.b);
    running_value += left.value + right.value - worst.value;
    running_error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    // Periodic exact resummation keeps the running totals honest.
    if (queue.size() % 64 == 0) totals(running_value, running_error);
  }
  totals(value, error);
  out.value = value;
  out.error_bound = error;
  out.panels = static_cast<int>(queue.size());
  return out;
}

ChiRule make_chi_rule(int r, const QuadratureSpec& spec, int subdivisions,
                      int order) {
  if (r < 1) throw std::invalid_argument("make_chi_rule: r must be >= 1");
  spec.validate();
  std::vector<double> gx, gw;
  gauss_legendre(order, gx, gw);
  const std::vector<double> edges = initial_edges(r, spec);
  ChiRule rule;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a0 = edges[i], b0 = edges[i + 1];
    const bool geometric = a0 > 0.0 && b0 > 4.0 * a0;
    for (int s = 0; s < subdivisions; ++s) {
      const double t0 = static_cast<double>(s) / subdivisions;
      const double t1 = static_cast<double>(s + 1) / subdivisions;
      const double a = geometric ? a0 * std::pow(b0 / a0, t0) : a0 + (b0 - a0) * t0;
      const double b = geometric ? a0 * std::pow(b0 / a0, t1) : a0 + (b0 - a0) * t1;
      const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (std::size_t k = 0; k < gx.size(); ++k) {
        const double w = mid + half * gx[k];
        const double weight = gw[k] * half * std::exp(chi2_log_pdf(r, w));
        rule.z.push_back(std::sqrt(r / w));
        rule.weight.push_back(weight);
        total += weight;
      }
    }
  }
  for (double& w : rule.weight) w /= total;
  rule.truncation_mass = spec.lower_quantile + (1.0 - spec.upper_quantile);
  return rule;
}

}  // namespace dpjl
