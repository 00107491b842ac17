#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "decilab/quadrature.hpp"

namespace decilab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct WindowCheck {
  bool support_ok = false;
  double l2_norm_transform = 0.0;  // integral of |W^|^2 over the line, via 2 pi int W^2
  bool normalized = false;
  double decay_sup = 0.0;  // sup of |W^(xi)| (1+|xi|)^beta on the test grid
};

/// Continuous window W with its Fourier transform W^(xi) = int W(t) e^{-i xi t} dt.
class Window {
 public:
  using RealFn = std::function<double(double)>;
  using ComplexFn = std::function<cdouble(double)>;

  Window(RealFn evaluate, ComplexFn transform, double decay, Interval support, std::string name = "custom")
      : evaluate_(std::move(evaluate)),
        transform_(std::move(transform)),
        decay_(decay),
        support_(support),
        name_(std::move(name)) {
    if (!evaluate_ || !transform_) throw std::invalid_argument("Window: functions must be callable");
    if (!(support_.lo < support_.hi)) throw std::invalid_argument("Window: empty support");
    decay_constant_ = scan_decay(400.0, 8001);
  }

  double operator()(double t) const {
    if (t < support_.lo || t > support_.hi) return 0.0;
    return evaluate_(t);
  }
  cdouble transform(double xi) const { return transform_(xi); }
  double decay() const { return decay_; }
  Interval support() const { return support_; }
  const std::string& name() const { return name_; }

  /// Empirical K with |W^(xi)| <= K (1+|xi|)^{-beta}; used for truncating folded sums.
  double decay_constant() const { return decay_constant_; }

  double scan_decay(double range, std::size_t points) const {
    double sup = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
      const double xi = -range + 2.0 * range * static_cast<double>(k) / static_cast<double>(points - 1);
      sup = std::max(sup, std::abs(transform_(xi)) * std::pow(1.0 + std::abs(xi), decay_));
    }
    return sup;
  }

  /// Checks the support, normalization and decay hypotheses on the window.
  WindowCheck validate(double norm_tol = 1e-6) const {
    WindowCheck check;
    check.support_ok = support_.lo >= -1.0 - 1e-15 && support_.hi <= 1e-15;
    const double w2 = integrate([this](double t) { return evaluate_(t) * evaluate_(t); }, support_.lo, support_.hi, 4096);
    check.l2_norm_transform = kTwoPi * w2;
    check.normalized = std::abs(check.l2_norm_transform - 1.0) < norm_tol;
    check.decay_sup = decay_constant_;
    return check;
  }

 private:
  RealFn evaluate_;
  ComplexFn transform_;
  double decay_;
  Interval support_;
  std::string name_;
  double decay_constant_ = 0.0;
};

/// Cardinal B-spline of order m (degree m-1) on knots 0, 1, ..., m.
inline double cardinal_bspline(int order, double x) {
  if (order < 1) throw std::invalid_argument("cardinal_bspline: order must be >= 1");
  if (x < 0.0 || x >= static_cast<double>(order)) return 0.0;
  if (order == 1) return 1.0;
  const double m1 = static_cast<double>(order - 1);
  return (x * cardinal_bspline(order - 1, x) + (static_cast<double>(order) - x) * cardinal_bspline(order - 1, x - 1.0)) /
         m1;
}

/// int B_m(x)^2 dx, computed piecewise with a rule exact for polynomials of degree 2m-2.
inline double bspline_square_integral(int order) {
  const GaussRule rule = gauss_legendre(static_cast<std::size_t>(order));
  double total = 0.0;
  for (int k = 0; k < order; ++k) {
    total += integrate([order](double x) { return std::pow(cardinal_bspline(order, x), 2); }, k, k + 1, 1, rule);
  }
  return total;
}

/// Order-m cardinal B-spline rescaled to [-1, 0] and scaled so that int |W^|^2 = 2 pi int W^2 = 1.
inline Window make_bspline_window(int order = 4) {
  if (order < 3) throw std::invalid_argument("make_bspline_window: order must be >= 3");
  const double m = static_cast<double>(order);
  const double scale = 1.0 / std::sqrt(kTwoPi * bspline_square_integral(order) / m);
  auto eval = [order, m, scale](double t) { return scale * cardinal_bspline(order, m * (t + 1.0)); };
  auto transform = [order, m, scale](double xi) {
    const double y = xi / (2.0 * m);
    const double sinc = std::abs(y) < 1e-8 ? 1.0 - y * y / 6.0 : std::sin(y) / y;
    const double amp = scale / m * std::pow(sinc, order);
    return amp * cdouble(std::cos(0.5 * xi), std::sin(0.5 * xi));
  };
  return Window(eval, transform, m, Interval{-1.0, 0.0}, "bspline" + std::to_string(order));
}

}  // namespace decilab
