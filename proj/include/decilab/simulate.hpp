#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "decilab/kernels.hpp"
#include "decilab/quadrature.hpp"
#include "decilab/window.hpp"

namespace decilab {

// ---------------------------------------------------------------------------
// Counter-based randomness
// ---------------------------------------------------------------------------

/// Philox4x32-10 block: a stateless bijection of a 128-bit counter under a 64-bit key.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed of replicate r under a base seed; independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replicate) {
  return splitmix64(splitmix64(base_seed) ^ (replicate * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseKind { gaussian, rademacher, scaled_uniform };

/// I.i.d. noise with mean 0, variance 1 and finite fourth moment.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;

  /// kappa_4 = E xi^4 - 3.
  double kurtosis_excess() const {
    switch (kind) {
      case NoiseKind::gaussian: return 0.0;
      case NoiseKind::rademacher: return -2.0;
      case NoiseKind::scaled_uniform: return -1.2;
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
      case NoiseKind::gaussian: return "gaussian";
      case NoiseKind::rademacher: return "rademacher";
      case NoiseKind::scaled_uniform: return "scaled_uniform";
    }
    return "?";
  }

  static NoiseSpec parse(const std::string& name) {
    if (name == "gaussian") return {NoiseKind::gaussian};
    if (name == "rademacher") return {NoiseKind::rademacher};
    if (name == "scaled_uniform") return {NoiseKind::scaled_uniform};
    throw std::invalid_argument("unknown noise distribution '" + name + "'");
  }
};

/// xi_t for absolute time index t under the given seed.
inline double noise_value(const NoiseSpec& spec, std::uint64_t seed, long t) {
  const auto ut = static_cast<std::uint64_t>(t);
  const auto r = philox4x32({static_cast<std::uint32_t>(ut), static_cast<std::uint32_t>(ut >> 32), 0u, 0u},
                            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  constexpr double kUnit = 0x1.0p-53;
  switch (spec.kind) {
    case NoiseKind::gaussian: {
      const double u1 = (static_cast<double>(a >> 11) + 1.0) * kUnit;  // (0, 1]
      const double u2 = static_cast<double>(b >> 11) * kUnit;          // [0, 1)
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }
    case NoiseKind::rademacher: return (a >> 63) ? 1.0 : -1.0;
    case NoiseKind::scaled_uniform: {
      const double u = static_cast<double>(a >> 11) * kUnit;
      return std::sqrt(3.0) * (2.0 * u - 1.0);
    }
  }
  return 0.0;
}

/// xi_0, ..., xi_{count-1}.
inline std::vector<double> draw_noise(const NoiseSpec& spec, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("draw_noise: count must be >= 1");
  std::vector<double> out(count);
  for (std::size_t t = 0; t < count; ++t) out[t] = noise_value(spec, seed, static_cast<long>(t));
  return out;
}

// ---------------------------------------------------------------------------
// Decimated arrays
// ---------------------------------------------------------------------------

/// Z_{i,j,k} for one level; rows are branches, columns are k = 0..n-1.
struct PathMatrix {
  std::vector<std::vector<double>> values;
  std::size_t level = 0;
  long gamma = 1;
  std::uint64_t seed = 0;

  std::size_t branches() const { return values.size(); }
  std::size_t length() const { return values.empty() ? 0 : values.front().size(); }
};

/// Z_{i,j,k} = sum_t v_{i,j}(gamma_j k - t) xi_t, all branches from one noise stream.
inline PathMatrix simulate_decimated(const DecimatedFamily& family, std::size_t level, std::size_t n,
                                     const NoiseSpec& noise, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("simulate_decimated: n must be >= 1");
  const auto& lv = family.level(level);
  const long gamma = lv.gamma;
  // t ranges over [gamma k - (end-1), gamma k - start] for each kernel.
  long t_lo = 0;
  long t_hi = 0;
  bool first = true;
  for (const auto& v : lv.kernels) {
    const long lo = -(v.end() - 1);
    const long hi = gamma * static_cast<long>(n - 1) - v.start();
    t_lo = first ? lo : std::min(t_lo, lo);
    t_hi = first ? hi : std::max(t_hi, hi);
    first = false;
  }
  std::vector<double> xi(static_cast<std::size_t>(t_hi - t_lo + 1));
  for (long t = t_lo; t <= t_hi; ++t) xi[static_cast<std::size_t>(t - t_lo)] = noise_value(noise, seed, t);

  PathMatrix out;
  out.level = level;
  out.gamma = gamma;
  out.seed = seed;
  out.values.assign(lv.kernels.size(), std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < lv.kernels.size(); ++i) {
    const auto& v = lv.kernels[i];
    const auto& c = v.coeffs();
    for (std::size_t k = 0; k < n; ++k) {
      // t = gamma k - s for s in the support.
      const long base = gamma * static_cast<long>(k) - v.start() - t_lo;
      double acc = 0.0;
      for (std::size_t q = 0; q < c.size(); ++q) acc += c[q] * xi[static_cast<std::size_t>(base - static_cast<long>(q))];
      out.values[i][k] = acc;
    }
  }
  return out;
}

/// One-branch, gamma = 1 family around a single kernel.
inline DecimatedFamily single_kernel_family(const TimeKernel& kernel, long gamma = 1) {
  FamilyLevel lv;
  lv.gamma = gamma;
  lv.kernels = {kernel};
  lv.center_freqs = {0.0};
  return DecimatedFamily({lv}, {0.0}, 1.0);
}

/// X_1..X_n of the linear process sum_t a(u - t) xi_t; element m holds the value at time index m.
inline std::vector<double> simulate_linear_process(const TimeKernel& a, std::size_t n, const NoiseSpec& noise,
                                                   std::uint64_t seed) {
  return simulate_decimated(single_kernel_family(a), 0, n, noise, seed).values.front();
}

struct TruncatedKernel {
  TimeKernel kernel;
  double tail_mass = 0.0;  // l2 mass of the discarded weights
};

/// Causal AR(1) weights phi^t, truncated once the remaining l2 mass is below tail_tol.
inline TruncatedKernel ar1_kernel(double phi, double tail_tol = 1e-12) {
  if (!(std::abs(phi) < 1.0)) throw std::invalid_argument("ar1_kernel: |phi| must be < 1");
  std::vector<double> w{1.0};
  double tail = phi * phi / (1.0 - phi * phi);
  while (tail >= tail_tol) {
    w.push_back(w.back() * phi);
    tail *= phi * phi;
  }
  return {TimeKernel(0, std::move(w)), tail};
}

/// n_j = floor((n + 1) / gamma).
inline std::size_t coefficient_count(std::size_t n, long gamma) {
  return (n + 1) / static_cast<std::size_t>(gamma);
}

/// Z_{1,j,k} = gamma^{-1/2} sum_{u=1}^{n} W(k - u/gamma) X_u for k = 0..n_j-1; x[u-1] holds X_u.
inline std::vector<double> windowed_coefficients(const std::vector<double>& x, const Window& window, long gamma) {
  if (gamma < 2 || gamma % 2 != 0) throw std::invalid_argument("windowed_coefficients: gamma must be an even integer >= 2");
  const Interval supp = window.support();
  if (supp.lo < -1.0 || supp.hi > 0.0) {
    throw std::invalid_argument("windowed_coefficients: window support must lie in [-1, 0]");
  }
  const std::size_t n = x.size();
  const std::size_t nj = coefficient_count(n, gamma);
  const auto g = static_cast<double>(gamma);
  const double scale = 1.0 / std::sqrt(g);
  std::vector<double> z(nj, 0.0);
  for (std::size_t k = 0; k < nj; ++k) {
    // W(k - u/gamma) != 0 only for u in [gamma k, gamma (k+1)].
    const long lo = std::max<long>(1, gamma * static_cast<long>(k));
    const long hi = std::min<long>(static_cast<long>(n), gamma * static_cast<long>(k + 1));
    double acc = 0.0;
    for (long u = lo; u <= hi; ++u) {
      acc += window(static_cast<double>(k) - static_cast<double>(u) / g) * x[static_cast<std::size_t>(u - 1)];
    }
    z[k] = scale * acc;
  }
  return z;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// CSV: a '#' header line with level, gamma and seed, then `k,Z_1,...,Z_N`.
inline void write_paths_csv(std::ostream& out, const PathMatrix& paths, const std::string& digest = {}) {
  std::ostringstream os;
  os << "# level=" << paths.level << " gamma=" << paths.gamma << " seed=" << paths.seed;
  if (!digest.empty()) os << " digest=" << digest;
  os << '\n' << 'k';
  for (std::size_t i = 0; i < paths.branches(); ++i) os << ",Z_" << i + 1;
  os << '\n';
  for (std::size_t k = 0; k < paths.length(); ++k) {
    os << k;
    for (std::size_t i = 0; i < paths.branches(); ++i) os << ',' << format_double(paths.values[i][k]);
    os << '\n';
  }
  out << os.str();
}

}  // namespace decilab
