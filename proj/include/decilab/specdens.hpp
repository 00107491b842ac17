#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "decilab/kernels.hpp"
#include "decilab/moments.hpp"
#include "decilab/quadrature.hpp"
#include "decilab/simulate.hpp"
#include "decilab/window.hpp"

namespace decilab {

/// Raised when an input falls outside the hypotheses under which a prediction holds.
struct HypothesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rejects windows whose transform decays too slowly for the bias and variance predictions.
inline void require_estimator_hypotheses(const Window& window) {
  if (!(window.decay() > 2.0)) {
    throw HypothesisError("outside the estimator hypotheses: window decay beta = " + format_double(window.decay()) +
                          " must exceed 2");
  }
}

/// B_j(lambda) = sum_p gamma^{1/2} W^(gamma (lambda + 2 p pi)).
inline cdouble folded_window_response(const Window& window, long gamma, double lambda) {
  if (gamma < 2 || gamma % 2 != 0) throw std::invalid_argument("folded_window_response: gamma must be even and >= 2");
  const double beta = window.decay();
  if (!(beta > 1.0)) throw std::invalid_argument("folded_window_response: window decay must exceed 1");
  // Reduce to [-pi, pi) so that the truncated sum is periodic to rounding.
  const double reduced = lambda - kTwoPi * std::floor((lambda + kPi) / kTwoPi);
  const auto g = static_cast<double>(gamma);
  const double k = window.decay_constant();
  auto tail = [&](long p) {
    const double base = 1.0 + g * (2.0 * static_cast<double>(p) - 1.0) * kPi;
    return 2.0 * std::sqrt(g) * k * std::pow(base, 1.0 - beta) / (2.0 * g * kPi * (beta - 1.0));
  };
  long aliases = 8;
  while (tail(aliases + 1) >= 1e-12 && aliases < 1000000) ++aliases;
  cdouble total{};
  for (long p = -aliases; p <= aliases; ++p) total += window.transform(g * (reduced + kTwoPi * static_cast<double>(p)));
  return std::sqrt(g) * total;
}

/// Level kernels of the observation pipeline: (gamma^{-1/2} W(./gamma)) * a, with limit a*(0) W^.
inline DecimatedFamily window_pipeline_family(const Window& window, const TimeKernel& a, const std::vector<long>& gammas) {
  if (gammas.empty()) throw std::invalid_argument("window_pipeline_family: empty gamma ladder");
  const Interval supp = window.support();
  std::vector<FamilyLevel> levels;
  for (std::size_t j = 0; j < gammas.size(); ++j) {
    const long gamma = gammas[j];
    if (gamma < 2 || gamma % 2 != 0) throw std::invalid_argument("window_pipeline_family: gamma must be even");
    if (j > 0 && gamma <= gammas[j - 1]) throw std::invalid_argument("window_pipeline_family: gamma must increase");
    const auto g = static_cast<double>(gamma);
    const auto first = static_cast<long>(std::ceil(g * supp.lo));
    const auto last = static_cast<long>(std::floor(g * supp.hi));
    std::vector<double> h;
    for (long r = first; r <= last; ++r) h.push_back(window(static_cast<double>(r) / g) / std::sqrt(g));
    std::vector<double> conv(h.size() + a.size() - 1, 0.0);
    for (std::size_t p = 0; p < h.size(); ++p) {
      for (std::size_t q = 0; q < a.size(); ++q) conv[p + q] += h[p] * a.coeffs()[q];
    }
    FamilyLevel lv;
    lv.gamma = gamma;
    lv.kernels.emplace_back(first + a.start(), std::move(conv));
    lv.center_freqs.push_back(0.0);
    levels.push_back(std::move(lv));
  }
  const cdouble a0 = eval_response(a, 0.0);
  std::vector<LimitResponse> limits{[window, a0](double x) { return a0 * window.transform(x); }};
  return DecimatedFamily(std::move(levels), {0.0}, window.decay(), std::move(limits));
}

struct RateCheck {
  double value = 0.0;
  bool ok = false;
  bool degenerate = false;  // n_j <= 1
};

/// n^{1/2} gamma^{1/2 - 2 beta} against a threshold.
inline RateCheck check_rate_condition(std::size_t n, long gamma, double beta, double threshold = 0.1) {
  if (!(beta > 2.0)) throw HypothesisError("outside the estimator hypotheses: beta must exceed 2");
  if (gamma < 1) throw std::invalid_argument("check_rate_condition: gamma must be positive");
  RateCheck r;
  r.value = std::sqrt(static_cast<double>(n)) * std::pow(static_cast<double>(gamma), 0.5 - 2.0 * beta);
  r.ok = r.value < threshold;
  r.degenerate = coefficient_count(n, gamma) <= 1;
  return r;
}

/// sigma^2 = 4 pi f0^2 int_{-pi}^{pi} (sum_p |W^(lambda + 2 p pi)|^2)^2 d lambda.
inline double asymptotic_sigma2(const Window& window, double f0) {
  if (f0 < 0.0) throw std::invalid_argument("asymptotic_sigma2: f0 must be >= 0");
  if (f0 == 0.0) return 0.0;
  const long aliases = fold_truncation(window.decay(), window.decay_constant(), 1e-10);
  const double folded = integrate_period(
      [&](double lambda) {
        double h = 0.0;
        for (long p = -aliases; p <= aliases; ++p) h += std::norm(window.transform(lambda + kTwoPi * static_cast<double>(p)));
        return h * h;
      },
      64);
  return 4.0 * kPi * f0 * f0 * folded;
}

struct SpecEstimate {
  double f0_hat = 0.0;
  std::size_t n = 0;
  long gamma = 0;
  std::size_t n_j = 0;
  double sigma2 = 0.0;
  double se = 0.0;          // (gamma sigma2 / n)^{1/2}, plug-in
  double bias_order = 0.0;  // gamma^{-2}
  double rate_value = 0.0;
  bool rate_ok = false;
  bool degenerate = false;
};

/// f^_n(0) = n_j^{-1} sum_k Z_{1,j,k}^2 from the windowed coefficients.
inline SpecEstimate estimate_f0(const std::vector<double>& x, const Window& window, long gamma,
                                double rate_threshold = 0.1) {
  require_estimator_hypotheses(window);
  if (x.size() < static_cast<std::size_t>(std::max<long>(gamma, 1))) {
    throw std::invalid_argument("estimate_f0: need n >= gamma (n_j would be 0)");
  }
  const std::vector<double> z = windowed_coefficients(x, window, gamma);
  SpecEstimate e;
  e.n = x.size();
  e.gamma = gamma;
  e.n_j = z.size();
  double sum = 0.0;
  for (double v : z) sum += v * v;
  e.f0_hat = sum / static_cast<double>(e.n_j);
  e.sigma2 = asymptotic_sigma2(window, e.f0_hat);
  e.se = std::sqrt(static_cast<double>(gamma) * e.sigma2 / static_cast<double>(e.n));
  e.bias_order = std::pow(static_cast<double>(gamma), -2.0);
  const RateCheck rc = check_rate_condition(e.n, gamma, window.decay(), rate_threshold);
  e.rate_value = rc.value;
  e.rate_ok = rc.ok;
  e.degenerate = rc.degenerate;
  return e;
}

/// E f^_n(0) = E Z_{1,j,0}^2 for the linear process with weights a.
inline double analytic_expectation(const Window& window, const TimeKernel& a, long gamma) {
  const DecimatedFamily fam = window_pipeline_family(window, a, {gamma});
  return cov_exact(fam, 0, 0, 0, 0, 0);
}

/// Least-squares slope of log|y| against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need matching sizes >= 2");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t k = 0; k < x.size(); ++k) {
    lx.push_back(std::log(x[k]));
    ly.push_back(std::log(std::abs(y[k])));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  return sxy / sxx;
}

struct BiasReport {
  std::string order_tag = "gamma^-2";
  std::vector<long> gammas;
  std::vector<double> bias;
  std::optional<double> slope;
};

/// Order marker plus, when means per level are given, the log-log slope of |mean - f0| against gamma.
inline BiasReport predict_bias(const Window& window, const std::vector<long>& gammas,
                               const std::vector<double>& means = {}, double f0 = 0.0) {
  require_estimator_hypotheses(window);
  BiasReport r;
  r.gammas = gammas;
  if (means.empty()) return r;
  if (means.size() != gammas.size()) throw std::invalid_argument("predict_bias: one mean per gamma required");
  std::vector<double> g;
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    r.bias.push_back(means[k] - f0);
    g.push_back(static_cast<double>(gammas[k]));
  }
  if (gammas.size() >= 2) r.slope = loglog_slope(g, r.bias);
  return r;
}

/// Exact bias E f^ - f0 per level, with its fitted slope.
inline BiasReport analytic_bias(const Window& window, const TimeKernel& a, const std::vector<long>& gammas, double f0) {
  std::vector<double> means;
  for (long gamma : gammas) means.push_back(analytic_expectation(window, a, gamma));
  return predict_bias(window, gammas, means, f0);
}

struct LeakageReport {
  double integral = 0.0;  // I_j
  double scaled = 0.0;    // n_j^{1/2} I_j
  std::size_t n_j = 0;
};

/// I_j = int_0^pi 1{|lambda - lambda_inf| > eps} |v*_{i,j}(lambda)|^2 d lambda.
inline LeakageReport leakage_integral(const DecimatedFamily& family, std::size_t level, double epsilon, std::size_t n = 0,
                                      std::size_t branch = 0) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("leakage_integral: epsilon must be positive");
  const TimeKernel& v = family.kernel(level, branch);
  const double center = family.limit_freqs().at(branch);
  const auto panels_per_unit = std::max(16.0, 2.0 * static_cast<double>(v.size() + static_cast<std::size_t>(std::abs(v.start()))));
  auto piece = [&](double a, double b) {
    if (b <= a) return 0.0;
    const auto panels = static_cast<std::size_t>(std::ceil(panels_per_unit * (b - a) / kPi)) + 8;
    return integrate([&](double lambda) { return std::norm(eval_response(v, lambda)); }, a, b, panels);
  };
  LeakageReport r;
  if (epsilon < kPi) r.integral = piece(0.0, std::max(0.0, center - epsilon)) + piece(std::min(kPi, center + epsilon), kPi);
  r.n_j = n == 0 ? 0 : coefficient_count(n, family.gamma(level));
  r.scaled = std::sqrt(static_cast<double>(r.n_j)) * r.integral;
  return r;
}

struct SweepRow {
  long gamma = 0;
  double f0_hat = 0.0;
  double se = 0.0;
  double rate_value = 0.0;
};

inline void write_specdens_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& digest = {}) {
  std::ostringstream os;
  if (!digest.empty()) os << "# digest=" << digest << '\n';
  os << "gamma,f0_hat,se,rate_value\n";
  for (const auto& r : rows) {
    os << r.gamma << ',' << format_double(r.f0_hat) << ',' << format_double(r.se) << ',' << format_double(r.rate_value) << '\n';
  }
  out << os.str();
}

/// Single-column CSV; blank lines and lines starting with '#' are skipped, a non-numeric first line is a header.
inline std::vector<double> read_series(std::istream& in, const std::string& origin = "<stream>") {
  std::vector<double> x;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line.substr(first));
    double v = 0.0;
    if (!(ls >> v) || !(ls >> std::ws).eof()) {
      if (x.empty() && !header_seen) {
        header_seen = true;
        continue;
      }
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected one number per line");
    }
    x.push_back(v);
  }
  if (x.empty()) throw std::runtime_error(origin + ": empty series");
  return x;
}

}  // namespace decilab
