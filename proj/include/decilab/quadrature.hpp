#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace decilab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using cdouble = std::complex<double>;

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule gauss_legendre(std::size_t order) {
  if (order == 0) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  if (order == 1) return {{0.0}, {2.0}};
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const auto n = static_cast<double>(order);
  for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
    // Tricomi's initial guess, then Newton on P_n.
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= order; ++k) {
        const auto kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

inline const GaussRule& gauss8() {
  static const GaussRule rule = gauss_legendre(8);
  return rule;
}

/// Composite Gauss-Legendre quadrature of f over [a, b].
template <class F>
auto integrate(F&& f, double a, double b, std::size_t panels = 64, const GaussRule& rule = gauss8()) {
  using R = decltype(f(a));
  R total{};
  if (b <= a || panels == 0) return total;
  const double h = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = a + (static_cast<double>(p) + 0.5) * h;
    R panel{};
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      panel += rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]);
    }
    total += 0.5 * h * panel;
  }
  return total;
}

/// Default rule on (-pi, pi): 64 panels x 8 nodes.
template <class F>
auto integrate_period(F&& f, std::size_t panels = 64) {
  return integrate(std::forward<F>(f), -kPi, kPi, panels);
}

/// Integral over the real line truncated to [-cutoff, cutoff], with panels no wider than max_width.
template <class F>
auto integrate_line(F&& f, double cutoff, double max_width = 0.25) {
  const auto panels = static_cast<std::size_t>(std::ceil(2.0 * cutoff / max_width));
  return integrate(std::forward<F>(f), -cutoff, cutoff, panels < 8 ? 8 : panels);
}

/// Smallest cutoff L with 2 * K^2 * (1+L)^{1-2 delta} / (2 delta - 1) below tol: the mass of
/// |g|^2 outside [-L, L] when |g(x)| <= K (1+|x|)^{-delta}.
inline double tail_cutoff(double delta, double decay_constant, double tol = 1e-10) {
  if (delta <= 0.5) throw std::invalid_argument("tail_cutoff: decay exponent must exceed 1/2");
  const double k2 = std::max(decay_constant * decay_constant, 1e-300);
  const double rhs = tol * (2.0 * delta - 1.0) / (2.0 * k2);
  return std::max(1.0, std::pow(rhs, 1.0 / (1.0 - 2.0 * delta)) - 1.0);
}

inline double tail_mass_bound(double delta, double decay_constant, double cutoff) {
  return 2.0 * decay_constant * decay_constant * std::pow(1.0 + cutoff, 1.0 - 2.0 * delta) /
         (2.0 * delta - 1.0);
}

}  // namespace decilab
