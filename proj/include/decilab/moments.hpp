#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "decilab/kernels.hpp"
#include "decilab/quadrature.hpp"
#include "decilab/simulate.hpp"

namespace decilab {

/// A limit or quadrature-based quantity with its error estimate.
struct MomentReport {
  double value = 0.0;
  double truncation_bound = 0.0;
  std::string inputs;
  double imag_residue = 0.0;
};

// ---------------------------------------------------------------------------
// Finite-level second moments
// ---------------------------------------------------------------------------

/// Cov(Z_{i,j,k}, Z_{i',j,k'}) = sum_t v_{i,j}(gamma k - t) v_{i',j}(gamma k' - t).
inline double cov_exact(const DecimatedFamily& family, std::size_t level, std::size_t i, std::size_t ip, long k,
                        long kp) {
  const long gamma = family.gamma(level);
  return lagged_inner(family.kernel(level, i), family.kernel(level, ip), gamma * (kp - k));
}

/// int_{-pi}^{pi} [v*_1 conj(v*_2)](lambda) e^{i freq lambda} d lambda, with panels sized to the bandwidth.
inline cdouble cross_spectrum_integral(const TimeKernel& v1, const TimeKernel& v2, long freq) {
  const auto bandwidth = static_cast<double>(v1.size() + v2.size()) + std::abs(static_cast<double>(freq)) +
                         static_cast<double>(std::abs(v1.start()) + std::abs(v2.start()));
  const auto panels = static_cast<std::size_t>(std::max(64.0, std::ceil(2.0 * bandwidth)));
  return integrate(
      [&](double lambda) {
        return eval_response(v1, lambda) * std::conj(eval_response(v2, lambda)) *
               cdouble(std::cos(static_cast<double>(freq) * lambda), std::sin(static_cast<double>(freq) * lambda));
      },
      -kPi, kPi, panels);
}

/// Spectral route to cov_exact.
inline cdouble cov_spectral(const DecimatedFamily& family, std::size_t level, std::size_t i, std::size_t ip, long k,
                            long kp) {
  return cross_spectrum_integral(family.kernel(level, i), family.kernel(level, ip), family.gamma(level) * (k - kp));
}

/// int_{-pi}^{pi} |v*|^2 d lambda.
inline double response_energy(const TimeKernel& v) { return cross_spectrum_integral(v, v, 0).real(); }

/// tau range where sum_u v1(u) v2(gamma tau + u) can be nonzero, clipped to |tau| < n.
inline std::pair<long, long> tau_range(const TimeKernel& v1, const TimeKernel& v2, long gamma, std::size_t n) {
  const auto floor_div = [](long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  const long shift_lo = v2.start() - (v1.end() - 1);
  const long shift_hi = (v2.end() - 1) - v1.start();
  const long lo = -floor_div(-shift_lo, gamma);  // ceil
  const long hi = floor_div(shift_hi, gamma);
  const long cap = static_cast<long>(n) - 1;
  return {std::max(lo, -cap), std::min(hi, cap)};
}

/// A_j(n) = sum_{|tau|<n} (1 - |tau|/n) (sum_u v_i(u) v_i'(gamma tau + u))^2.
inline double a_term(const DecimatedFamily& family, std::size_t level, std::size_t i, std::size_t ip, std::size_t n) {
  if (n == 0) throw std::invalid_argument("a_term: n must be >= 1");
  const auto& v1 = family.kernel(level, i);
  const auto& v2 = family.kernel(level, ip);
  const long gamma = family.gamma(level);
  const auto [lo, hi] = tau_range(v1, v2, gamma, n);
  const auto nd = static_cast<double>(n);
  double total = 0.0;
  for (long tau = lo; tau <= hi; ++tau) {
    const double c = lagged_inner(v1, v2, gamma * tau);
    total += (1.0 - std::abs(static_cast<double>(tau)) / nd) * c * c;
  }
  return total;
}

/// B_j(n) = sum_u v_i(u)^2 sum_{|tau|<n} (1 - |tau|/n) v_i'(gamma tau + u)^2.
inline double b_term(const DecimatedFamily& family, std::size_t level, std::size_t i, std::size_t ip, std::size_t n) {
  if (n == 0) throw std::invalid_argument("b_term: n must be >= 1");
  const auto& v1 = family.kernel(level, i);
  const auto& v2 = family.kernel(level, ip);
  const long gamma = family.gamma(level);
  const auto nd = static_cast<double>(n);
  const long cap = static_cast<long>(n) - 1;
  double total = 0.0;
  for (long u = v1.start(); u < v1.end(); ++u) {
    const double w = v1(u) * v1(u);
    if (w == 0.0) continue;
    double inner = 0.0;
    for (long tau = -cap; tau <= cap; ++tau) {
      const long s = gamma * tau + u;
      if (s < v2.start()) continue;
      if (s >= v2.end()) break;
      const double x = v2(s);
      inner += (1.0 - std::abs(static_cast<double>(tau)) / nd) * x * x;
    }
    total += w * inner;
  }
  return total;
}

/// n^{-1} Cov(sum_k Z_{i,j,k}^2, sum_k Z_{i',j,k}^2) = 2 A_j(n) + kappa_4 B_j(n).
inline double cov_of_square_sums(const DecimatedFamily& family, std::size_t level, std::size_t i, std::size_t ip,
                                 std::size_t n, const NoiseSpec& noise) {
  return 2.0 * a_term(family, level, i, ip, n) + noise.kurtosis_excess() * b_term(family, level, i, ip, n);
}

/// Upper bound 2 pi int |gamma^{-1} fold(v*_1 conj v*_2)|^2 on A_j(n).
inline double a_spectral_bound(const DecimatedFamily& family, std::size_t level, std::size_t i, std::size_t ip) {
  const auto& v1 = family.kernel(level, i);
  const auto& v2 = family.kernel(level, ip);
  const long gamma = family.gamma(level);
  const auto g = static_cast<double>(gamma);
  const auto panels = static_cast<std::size_t>(std::max<double>(64.0, 2.0 * static_cast<double>(v1.size() + v2.size()) / g + 8.0));
  return kTwoPi * integrate(
                      [&](double lambda) {
                        const cdouble f = fold(
                            [&](double x) { return eval_response(v1, x) * std::conj(eval_response(v2, x)); }, gamma,
                            lambda);
                        return std::norm(f / g);
                      },
                      -kPi, kPi, panels);
}

/// Upper bound int |v*_1|^2 * int (gamma^{-1} fold |v*_2|)^2 on B_j(n).
inline double b_spectral_bound(const DecimatedFamily& family, std::size_t level, std::size_t i, std::size_t ip) {
  const auto& v1 = family.kernel(level, i);
  const auto& v2 = family.kernel(level, ip);
  const long gamma = family.gamma(level);
  const auto g = static_cast<double>(gamma);
  const auto panels = static_cast<std::size_t>(std::max<double>(64.0, 2.0 * static_cast<double>(v2.size()) / g + 8.0));
  const double folded = integrate(
      [&](double lambda) {
        const double f = fold([&](double x) { return std::abs(eval_response(v2, x)); }, gamma, lambda) / g;
        return f * f;
      },
      -kPi, kPi, panels);
  return response_energy(v1) * folded;
}

// ---------------------------------------------------------------------------
// M_n functional
// ---------------------------------------------------------------------------

/// {sum_{|k|<n} (1 - |k|/n) |c_k|^2}^{1/2}, c_k = (2 pi)^{-1/2} int g(lambda) e^{i k lambda} d lambda.
/// Coefficients come from a periodic trapezoid rule with max(2048, 2K+2) nodes; only |k| <= K enter.
template <class G>
double m_n_functional(G&& g, std::size_t n, std::size_t max_coeff) {
  if (n == 0) throw std::invalid_argument("m_n_functional: n must be >= 1");
  if (max_coeff + 1 < n) throw std::invalid_argument("m_n_functional: need K >= n - 1");
  const std::size_t nodes = std::max<std::size_t>(2048, 2 * max_coeff + 2);
  const double h = kTwoPi / static_cast<double>(nodes);
  std::vector<cdouble> values(nodes);
  std::vector<cdouble> step(nodes);
  for (std::size_t m = 0; m < nodes; ++m) {
    const double lambda = -kPi + h * static_cast<double>(m);
    values[m] = cdouble(g(lambda));
    step[m] = cdouble(std::cos(lambda), std::sin(lambda));
  }
  const double norm = h / std::sqrt(kTwoPi);
  const auto nd = static_cast<double>(n);
  const long kmax = std::min<long>(static_cast<long>(n) - 1, static_cast<long>(max_coeff));
  double total = 0.0;
  for (int direction : {1, -1}) {
    std::vector<cdouble> phase(nodes, cdouble(1.0, 0.0));
    for (long k = 0; k <= kmax; ++k) {
      if (k > 0) {
        for (std::size_t m = 0; m < nodes; ++m) phase[m] *= direction > 0 ? step[m] : std::conj(step[m]);
      }
      if (k == 0 && direction < 0) continue;
      cdouble c{};
      for (std::size_t m = 0; m < nodes; ++m) c += values[m] * phase[m];
      c *= norm;
      total += (1.0 - static_cast<double>(k) / nd) * std::norm(c);
    }
  }
  return std::sqrt(total);
}

// ---------------------------------------------------------------------------
// Limits
// ---------------------------------------------------------------------------

/// C_{i,i'}: 0 for different limit frequencies, 1 when both are zero, 2 when both equal a positive value.
inline int limit_constant(const DecimatedFamily& family, std::size_t i, std::size_t ip) {
  const double a = family.limit_freqs().at(i);
  const double b = family.limit_freqs().at(ip);
  if (a != b) return 0;
  return a == 0.0 ? 1 : 2;
}

/// w*_{i,i'}(lambda) = [conj(v_i(-l)) v_i'(-l) + v_i(l) conj(v_i'(l))] / 2.
inline cdouble sym_product(const LimitResponse& vi, const LimitResponse& vip, double lambda) {
  return 0.5 * (std::conj(vi(-lambda)) * vip(-lambda) + vi(lambda) * std::conj(vip(lambda)));
}

/// K with |v*_{i,inf}(lambda)| <= K (1+|lambda|)^{-delta} on a wide grid.
inline double limit_decay_constant(const DecimatedFamily& family, std::size_t i) {
  const auto& v = family.limit_response(i);
  double sup = 0.0;
  constexpr std::size_t kPoints = 8001;
  constexpr double kRange = 400.0;
  for (std::size_t q = 0; q < kPoints; ++q) {
    const double x = -kRange + 2.0 * kRange * static_cast<double>(q) / static_cast<double>(kPoints - 1);
    sup = std::max(sup, std::abs(v(x)) * std::pow(1.0 + std::abs(x), family.decay()));
  }
  return sup;
}

inline std::string pair_digest(const char* what, std::size_t i, std::size_t ip, long lag) {
  std::ostringstream os;
  os << what << "(i=" << i + 1 << ",i'=" << ip + 1 << ",lag=" << lag << ")";
  return os.str();
}

inline constexpr double kImagResidueTolerance = 1e-8;

/// Integral over the line of w*_{i,i'}(lambda) e^{i lambda lag}, without the constant C.
inline MomentReport sym_product_integral(const DecimatedFamily& family, std::size_t i, std::size_t ip, long lag) {
  const auto& vi = family.limit_response(i);
  const auto& vip = family.limit_response(ip);
  const double delta = family.decay();
  const double kk = std::sqrt(limit_decay_constant(family, i) * limit_decay_constant(family, ip));
  const double cutoff = tail_cutoff(delta, kk, 1e-10);
  const double width = std::min(0.25, 1.0 / (1.0 + std::abs(static_cast<double>(lag))));
  auto integrand = [&](double x) {
    return sym_product(vi, vip, x) * cdouble(std::cos(static_cast<double>(lag) * x), std::sin(static_cast<double>(lag) * x));
  };
  const cdouble fine = integrate_line(integrand, cutoff, width);
  const cdouble coarse = integrate_line(integrand, cutoff, 2.0 * width);
  MomentReport r;
  r.value = fine.real();
  r.imag_residue = std::abs(fine.imag());
  r.truncation_bound = tail_mass_bound(delta, kk, cutoff) + std::abs(fine - coarse);
  r.inputs = pair_digest("sym_product_integral", i, ip, lag);
  return r;
}

inline void require_real(const MomentReport& r) {
  if (r.imag_residue > kImagResidueTolerance) {
    throw std::runtime_error(r.inputs + ": imaginary residue " + format_double(r.imag_residue) + " exceeds 1e-8");
  }
}

/// Limit of Cov(Z_{i,j,k}, Z_{i',j,k+lag}): C_{i,i'} int w*_{i,i'}(lambda) e^{i lambda lag} d lambda.
inline MomentReport limit_cross_cov(const DecimatedFamily& family, std::size_t i, std::size_t ip, long lag) {
  if (!family.has_limit()) throw std::invalid_argument("limit_cross_cov: family has no limit responses");
  const int c = limit_constant(family, i, ip);
  if (c == 0) return {0.0, 0.0, pair_digest("limit_cross_cov", i, ip, lag), 0.0};
  MomentReport r = sym_product_integral(family, i, ip, lag);
  require_real(r);
  r.value *= c;
  r.truncation_bound *= c;
  r.inputs = pair_digest("limit_cross_cov", i, ip, lag);
  return r;
}

/// Limit of Cov(Z_{i,j,k}^2, Z_{i',j,k+lag}^2) = 2 C^2 (int w* e^{i lambda lag})^2.
inline double limit_cov_squares(const DecimatedFamily& family, std::size_t i, std::size_t ip, long lag) {
  if (!family.has_limit()) throw std::invalid_argument("limit_cov_squares: family has no limit responses");
  const int c = limit_constant(family, i, ip);
  if (c == 0) return 0.0;
  const MomentReport r = sym_product_integral(family, i, ip, lag);
  require_real(r);
  return 2.0 * c * c * r.value * r.value;
}

/// Number of aliases P so that the folded-sum tail over |p| > P is below tol.
inline long fold_truncation(double delta, double decay_constant, double tol, double* tail_out = nullptr) {
  long p = 8;
  auto tail = [&](long pp) {
    const double base = 1.0 + (2.0 * static_cast<double>(pp) - 1.0) * kPi;
    return 2.0 * decay_constant * decay_constant * std::pow(base, 1.0 - 2.0 * delta) / (kTwoPi * (2.0 * delta - 1.0));
  };
  while (tail(p + 1) >= tol && p < 100000) ++p;
  if (tail_out) *tail_out = tail(p + 1);
  return p;
}

/// Gamma_{i,i'} = 4 pi C^2 int_{-pi}^{pi} |sum_p w*_{i,i'}(lambda + 2 p pi)|^2 d lambda.
inline MomentReport gamma_limit(const DecimatedFamily& family, std::size_t i, std::size_t ip) {
  if (!family.has_limit()) throw std::invalid_argument("gamma_limit: family has no limit responses");
  const int c = limit_constant(family, i, ip);
  if (c == 0) return {0.0, 0.0, pair_digest("gamma_limit", i, ip, 0), 0.0};
  const auto& vi = family.limit_response(i);
  const auto& vip = family.limit_response(ip);
  const double kk = limit_decay_constant(family, i) * limit_decay_constant(family, ip);
  double tail = 0.0;
  const long aliases = fold_truncation(family.decay(), std::sqrt(kk), 1e-10, &tail);
  double sup = 0.0;
  auto integrand = [&](double lambda) {
    cdouble s{};
    for (long p = -aliases; p <= aliases; ++p) s += sym_product(vi, vip, lambda + kTwoPi * static_cast<double>(p));
    sup = std::max(sup, std::abs(s));
    return std::norm(s);
  };
  const double fine = integrate_period(integrand, 64);
  const double coarse = integrate_period(integrand, 32);
  const double factor = 4.0 * kPi * c * c;
  MomentReport r;
  r.value = factor * fine;
  r.truncation_bound = factor * (kTwoPi * (2.0 * sup * tail + tail * tail) + std::abs(fine - coarse));
  r.inputs = pair_digest("gamma_limit", i, ip, 0);
  return r;
}

struct GammaMatrix {
  std::vector<std::vector<double>> entries;
  std::vector<std::vector<int>> constants;
  std::vector<std::vector<double>> bounds;
  double min_eigenvalue = 0.0;

  std::size_t size() const { return entries.size(); }
};

inline GammaMatrix gamma_matrix(const DecimatedFamily& family) {
  const std::size_t n = family.branches();
  GammaMatrix g;
  g.entries.assign(n, std::vector<double>(n, 0.0));
  g.bounds.assign(n, std::vector<double>(n, 0.0));
  g.constants.assign(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ip = i; ip < n; ++ip) {
      const MomentReport r = gamma_limit(family, i, ip);
      g.entries[i][ip] = g.entries[ip][i] = r.value;
      g.bounds[i][ip] = g.bounds[ip][i] = r.truncation_bound;
      g.constants[i][ip] = g.constants[ip][i] = limit_constant(family, i, ip);
    }
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ip = 0; ip < n; ++ip) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ip)) = g.entries[i][ip];
  }
  g.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  return g;
}

inline void write_matrix_csv(std::ostream& out, const std::vector<std::vector<double>>& m, const std::string& header) {
  std::ostringstream os;
  if (!header.empty()) os << "# " << header << '\n';
  os << "row";
  for (std::size_t c = 0; c < m.size(); ++c) os << ",col_" << c + 1;
  os << '\n';
  for (std::size_t r = 0; r < m.size(); ++r) {
    os << r + 1;
    for (double v : m[r]) os << ',' << format_double(v);
    os << '\n';
  }
  out << os.str();
}

}  // namespace decilab
