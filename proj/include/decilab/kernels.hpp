#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "decilab/quadrature.hpp"
#include "decilab/window.hpp"

namespace decilab {

/// Finitely supported real filter v(t), t = start, ..., start + size() - 1.
class TimeKernel {
 public:
  TimeKernel(long start, std::vector<double> coeffs) : start_(start), coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("TimeKernel: at least one coefficient required");
    for (double c : coeffs_) {
      if (!std::isfinite(c)) throw std::invalid_argument("TimeKernel: coefficients must be finite");
    }
  }

  static TimeKernel impulse(long at = 0) { return TimeKernel(at, {1.0}); }

  long start() const { return start_; }
  long end() const { return start_ + static_cast<long>(coeffs_.size()); }  // one past the last index
  std::size_t size() const { return coeffs_.size(); }
  const std::vector<double>& coeffs() const { return coeffs_; }

  double operator()(long t) const {
    if (t < start_ || t >= end()) return 0.0;
    return coeffs_[static_cast<std::size_t>(t - start_)];
  }

  double energy() const {
    double s = 0.0;
    for (double c : coeffs_) s += c * c;
    return s;
  }

 private:
  long start_;
  std::vector<double> coeffs_;
};

/// v*(lambda) = (2 pi)^{-1/2} sum_t v(t) e^{-i lambda t}.
inline cdouble eval_response(const TimeKernel& kernel, double lambda) {
  double re = 0.0;
  double im = 0.0;
  long t = kernel.start();
  for (double c : kernel.coeffs()) {
    const double arg = lambda * static_cast<double>(t);
    re += c * std::cos(arg);
    im -= c * std::sin(arg);
    ++t;
  }
  const double norm = 1.0 / std::sqrt(kTwoPi);
  return {norm * re, norm * im};
}

/// sum_{p=0}^{gamma-1} g((lambda + 2 p pi) / gamma).
template <class G>
auto fold(G&& g, long gamma, double lambda) {
  if (gamma < 1) throw std::invalid_argument("fold: gamma must be >= 1");
  using R = decltype(g(lambda));
  R total{};
  const double inv = 1.0 / static_cast<double>(gamma);
  for (long p = 0; p < gamma; ++p) total += g((lambda + kTwoPi * static_cast<double>(p)) * inv);
  return total;
}

/// sum_u v1(u) v2(u + shift).
inline double lagged_inner(const TimeKernel& v1, const TimeKernel& v2, long shift) {
  const long lo = std::max(v1.start(), v2.start() - shift);
  const long hi = std::min(v1.end(), v2.end() - shift);
  double s = 0.0;
  for (long u = lo; u < hi; ++u) s += v1(u) * v2(u + shift);
  return s;
}

using LimitResponse = std::function<cdouble(double)>;
using PhaseFunction = std::function<double(std::size_t level, double lambda)>;

struct FamilyLevel {
  long gamma = 1;
  std::vector<TimeKernel> kernels;
  std::vector<double> center_freqs;
};

/// N branches x J levels of decimated filters, with their centre and limit frequencies.
class DecimatedFamily {
 public:
  DecimatedFamily(std::vector<FamilyLevel> levels, std::vector<double> limit_freqs, double decay,
                  std::optional<std::vector<LimitResponse>> limit_responses = std::nullopt, PhaseFunction phase = {},
                  std::size_t threshold = 0)
      : levels_(std::move(levels)),
        limit_freqs_(std::move(limit_freqs)),
        decay_(decay),
        limit_responses_(std::move(limit_responses)),
        phase_(std::move(phase)),
        threshold_(threshold) {
    if (levels_.empty()) throw std::invalid_argument("DecimatedFamily: at least one level required");
    const std::size_t n = limit_freqs_.size();
    if (n == 0) throw std::invalid_argument("DecimatedFamily: at least one branch required");
    if (!(decay_ > 0.5)) throw std::invalid_argument("DecimatedFamily: decay exponent must exceed 1/2");
    for (double f : limit_freqs_) check_frequency(f, "limit frequency");
    for (std::size_t j = 0; j < levels_.size(); ++j) {
      const auto& lv = levels_[j];
      if (lv.gamma < 1) throw std::invalid_argument("DecimatedFamily: gamma must be positive");
      if (j > 0 && lv.gamma <= levels_[j - 1].gamma) {
        throw std::invalid_argument("DecimatedFamily: gamma must be strictly increasing across levels");
      }
      if (lv.kernels.size() != n || lv.center_freqs.size() != n) {
        throw std::invalid_argument("DecimatedFamily: every level needs one kernel and one centre frequency per branch");
      }
      for (double f : lv.center_freqs) check_frequency(f, "centre frequency");
    }
    if (limit_responses_ && limit_responses_->size() != n) {
      throw std::invalid_argument("DecimatedFamily: one limit response per branch required");
    }
  }

  std::size_t branches() const { return limit_freqs_.size(); }
  std::size_t level_count() const { return levels_.size(); }
  const FamilyLevel& level(std::size_t j) const {
    if (j >= levels_.size()) throw std::out_of_range("DecimatedFamily: level index out of range");
    return levels_[j];
  }
  const std::vector<FamilyLevel>& levels() const { return levels_; }
  const TimeKernel& kernel(std::size_t j, std::size_t i) const { return level(j).kernels.at(i); }
  long gamma(std::size_t j) const { return level(j).gamma; }
  const std::vector<double>& limit_freqs() const { return limit_freqs_; }
  double decay() const { return decay_; }
  std::size_t threshold() const { return threshold_; }
  bool has_limit() const { return limit_responses_.has_value(); }
  const LimitResponse& limit_response(std::size_t i) const {
    if (!limit_responses_) throw std::logic_error("DecimatedFamily: limit responses unavailable");
    return limit_responses_->at(i);
  }
  const std::vector<LimitResponse>& limit_responses() const {
    if (!limit_responses_) throw std::logic_error("DecimatedFamily: limit responses unavailable");
    return *limit_responses_;
  }
  const PhaseFunction& phase() const { return phase_; }

  /// Same family with every limit response multiplied by a common unimodular factor.
  DecimatedFamily with_limit_phase(double theta) const {
    if (!limit_responses_) throw std::logic_error("DecimatedFamily: limit responses unavailable");
    std::vector<LimitResponse> rotated;
    const cdouble factor(std::cos(theta), std::sin(theta));
    for (const auto& f : *limit_responses_) rotated.push_back([f, factor](double x) { return factor * f(x); });
    return DecimatedFamily(levels_, limit_freqs_, decay_, rotated, phase_, threshold_);
  }

 private:
  static void check_frequency(double f, const char* what) {
    if (!(f >= 0.0 && f < kPi)) throw std::invalid_argument(std::string("DecimatedFamily: ") + what + " must lie in [0, pi)");
  }

  std::vector<FamilyLevel> levels_;
  std::vector<double> limit_freqs_;
  double decay_;
  std::optional<std::vector<LimitResponse>> limit_responses_;
  PhaseFunction phase_;
  std::size_t threshold_;
};

inline constexpr double kIntegerTolerance = 1e-9;

inline bool is_nonnegative_integer(double x, double tol = kIntegerTolerance) {
  return x > -tol && std::abs(x - std::round(x)) < tol;
}

struct LevelDiagnostics {
  std::size_t level = 0;
  long gamma = 0;
  bool checked = false;  // level at or beyond the family threshold
  bool gamma_even = false;
  std::vector<bool> integer_ok;  // per branch
  double uniform_bound = 0.0;    // max over branches of the grid sup
  std::optional<double> limit_residual;
  std::optional<double> modulus_residual;
};

struct ConditionReport {
  bool integer_condition = true;
  bool zero_frequency_condition = true;
  bool coincidence_condition = true;
  bool evenness = true;
  bool limit_available = false;
  bool phase_supplied = false;
  double uniform_bound_max = 0.0;
  std::vector<LevelDiagnostics> levels;
};

struct ConditionOptions {
  bool residuals = true;
  double residual_range = 20.0;  // lambda grid [-range, range] for the rescaled limit
  std::size_t residual_points = 801;
};

/// Numerical check of the concentration hypotheses on every stored level.
inline ConditionReport check_condition_c(const DecimatedFamily& family, std::size_t grid_size,
                                         const ConditionOptions& options = {}) {
  if (family.level_count() < 2) throw std::invalid_argument("check_condition_c: at least two levels required");
  if (grid_size < 2) throw std::invalid_argument("check_condition_c: grid_size must be >= 2");
  ConditionReport report;
  report.limit_available = family.has_limit() && options.residuals;
  report.phase_supplied = static_cast<bool>(family.phase());
  const std::size_t n = family.branches();
  const auto& limit = family.limit_freqs();
  for (std::size_t j = 0; j < family.level_count(); ++j) {
    const auto& lv = family.level(j);
    LevelDiagnostics diag;
    diag.level = j;
    diag.gamma = lv.gamma;
    diag.checked = j >= family.threshold();
    diag.gamma_even = lv.gamma % 2 == 0;
    const auto g = static_cast<double>(lv.gamma);
    for (std::size_t i = 0; i < n; ++i) {
      const bool ok = is_nonnegative_integer(g * lv.center_freqs[i] / kTwoPi);
      diag.integer_ok.push_back(ok);
      if (diag.checked) {
        if (!ok) report.integer_condition = false;
        if (limit[i] == 0.0 && lv.center_freqs[i] != 0.0) report.zero_frequency_condition = false;
        for (std::size_t k = i + 1; k < n; ++k) {
          if (limit[i] == limit[k] && lv.center_freqs[i] != lv.center_freqs[k]) report.coincidence_condition = false;
        }
      }
    }
    if (diag.checked && !diag.gamma_even) report.evenness = false;

    const double scale = 1.0 / std::sqrt(g);
    for (std::size_t i = 0; i < n; ++i) {
      double sup = 0.0;
      for (std::size_t q = 0; q < grid_size; ++q) {
        const double lambda = kPi * static_cast<double>(q) / static_cast<double>(grid_size);
        const double v = scale * std::abs(eval_response(lv.kernels[i], lambda)) *
                         std::pow(1.0 + g * std::abs(lambda - lv.center_freqs[i]), family.decay());
        sup = std::max(sup, v);
      }
      diag.uniform_bound = std::max(diag.uniform_bound, sup);
    }
    report.uniform_bound_max = std::max(report.uniform_bound_max, diag.uniform_bound);

    if (report.limit_available) {
      double res = 0.0;
      double mod = 0.0;
      const auto& phase = family.phase();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& vinf = family.limit_response(i);
        for (std::size_t q = 0; q < options.residual_points; ++q) {
          const double x = -options.residual_range + 2.0 * options.residual_range * static_cast<double>(q) /
                                                         static_cast<double>(options.residual_points - 1);
          cdouble lhs = scale * eval_response(lv.kernels[i], x / g + lv.center_freqs[i]);
          const cdouble target = vinf(x);
          mod = std::max(mod, std::abs(std::abs(lhs) - std::abs(target)));
          if (phase) lhs *= std::polar(1.0, phase(j, x));
          res = std::max(res, std::abs(lhs - target));
        }
      }
      diag.limit_residual = res;
      diag.modulus_residual = mod;
    }
    report.levels.push_back(std::move(diag));
  }
  return report;
}

/// lambda_j = 2 pi round(gamma lambda_inf / 2 pi) / gamma, kept inside [0, pi).
inline double integer_frequency(long gamma, double lambda_inf) {
  if (lambda_inf == 0.0) return 0.0;
  const auto g = static_cast<double>(gamma);
  double q = std::round(g * lambda_inf / kTwoPi);
  if (kTwoPi * q / g >= kPi) q -= 1.0;
  return kTwoPi * q / g;
}

/// One branch per modulation frequency: v_{i,j}(t) = gamma^{-1/2} W(t/gamma) cos(lambda_{i,j} t).
inline DecimatedFamily make_scaled_window_family(const Window& prototype, const std::vector<long>& gammas,
                                                 const std::vector<double>& modulation_freqs) {
  if (gammas.empty()) throw std::invalid_argument("make_scaled_window_family: empty gamma ladder");
  if (modulation_freqs.empty()) throw std::invalid_argument("make_scaled_window_family: no branches");
  for (double f : modulation_freqs) {
    if (!(f >= 0.0 && f < kPi)) throw std::invalid_argument("make_scaled_window_family: modulation frequency outside [0, pi)");
  }
  const Interval supp = prototype.support();
  std::vector<FamilyLevel> levels;
  for (std::size_t j = 0; j < gammas.size(); ++j) {
    const long gamma = gammas[j];
    if (gamma < 2 || gamma % 2 != 0) throw std::invalid_argument("make_scaled_window_family: gamma must be even");
    if (j > 0 && gamma <= gammas[j - 1]) throw std::invalid_argument("make_scaled_window_family: gamma must increase");
    const auto g = static_cast<double>(gamma);
    const auto first = static_cast<long>(std::ceil(g * supp.lo));
    const auto last = static_cast<long>(std::floor(g * supp.hi));
    FamilyLevel lv;
    lv.gamma = gamma;
    for (double f : modulation_freqs) {
      const double center = integer_frequency(gamma, f);
      std::vector<double> coeffs;
      for (long t = first; t <= last; ++t) {
        const double td = static_cast<double>(t);
        coeffs.push_back(prototype(td / g) * std::cos(center * td) / std::sqrt(g));
      }
      lv.kernels.emplace_back(first, std::move(coeffs));
      lv.center_freqs.push_back(center);
    }
    levels.push_back(std::move(lv));
  }
  std::vector<LimitResponse> limits;
  for (double f : modulation_freqs) {
    // cos modulation splits the energy between +lambda and -lambda.
    const double amp = (f == 0.0 ? 1.0 : 0.5) / std::sqrt(kTwoPi);
    limits.push_back([prototype, amp](double x) { return amp * prototype.transform(x); });
  }
  return DecimatedFamily(std::move(levels), modulation_freqs, prototype.decay(), std::move(limits));
}

inline DecimatedFamily make_scaled_window_family(const Window& prototype, const std::vector<long>& gammas,
                                                 double modulation_freq) {
  return make_scaled_window_family(prototype, gammas, std::vector<double>{modulation_freq});
}

/// Single-branch low-pass family built from the order-m B-spline window.
inline DecimatedFamily moving_average_family(const std::vector<long>& gammas, int order = 4) {
  return make_scaled_window_family(make_bspline_window(order), gammas, 0.0);
}

/// Two branches from the same window, one at the origin and one modulated to pi/2.
inline DecimatedFamily two_frequency_family(const std::vector<long>& gammas, int order = 4) {
  return make_scaled_window_family(make_bspline_window(order), gammas, std::vector<double>{0.0, kPi / 2.0});
}

/// Reads the kernel exchange format: first line support_start, then one coefficient per line.
inline TimeKernel read_kernel(std::istream& in, const std::string& origin = "<stream>") {
  std::string line;
  std::size_t lineno = 0;
  std::optional<long> start;
  std::vector<double> coeffs;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    std::istringstream ls(line.substr(first));
    if (!start) {
      long s = 0;
      if (!(ls >> s) || !(ls >> std::ws).eof()) {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected integer support_start");
      }
      start = s;
    } else {
      double c = 0.0;
      if (!(ls >> c) || !(ls >> std::ws).eof()) {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected decimal coefficient");
      }
      coeffs.push_back(c);
    }
  }
  if (!start) throw std::runtime_error(origin + ": missing support_start");
  if (coeffs.empty()) throw std::runtime_error(origin + ": no coefficients");
  return TimeKernel(*start, std::move(coeffs));
}

inline TimeKernel read_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open kernel file " + path);
  return read_kernel(in, path);
}

inline void write_kernel(std::ostream& out, const TimeKernel& kernel) {
  std::ostringstream buf;
  buf.precision(17);
  buf << kernel.start() << '\n';
  for (double c : kernel.coeffs()) buf << c << '\n';
  out << buf.str();
}

}  // namespace decilab
