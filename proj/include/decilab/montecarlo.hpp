#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "decilab/kernels.hpp"
#include "decilab/moments.hpp"
#include "decilab/simulate.hpp"

namespace decilab {

/// Worker count: DECILAB_THREADS when set to a positive integer, else hardware concurrency.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("DECILAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) return static_cast<std::size_t>(cap);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(r) for r in [0, count) over a fixed pool; each index is owned by one worker.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t r = w; r < count; r += workers) body(r);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

enum class Centering { exact, limit };

inline std::string centering_name(Centering c) { return c == Centering::exact ? "exact" : "limit"; }

inline Centering parse_centering(const std::string& s) {
  if (s == "exact") return Centering::exact;
  if (s == "limit") return Centering::limit;
  throw std::invalid_argument("unknown centering '" + s + "'");
}

/// R x N normalized centered square-sums n^{-1/2} sum_k (Z_{i,j,k}^2 - center_i).
struct ReplicateSet {
  std::vector<std::vector<double>> samples;
  std::vector<double> centers;
  std::size_t level = 0;
  long gamma = 0;
  std::size_t n = 0;
  std::string noise;
  std::uint64_t base_seed = 0;
  Centering centering = Centering::exact;

  std::size_t replicates() const { return samples.size(); }
  std::size_t coords() const { return samples.empty() ? 0 : samples.front().size(); }

  std::string digest() const {
    std::ostringstream os;
    os << "level=" << level << " gamma=" << gamma << " n=" << n << " noise=" << noise << " base_seed=" << base_seed
       << " centering=" << centering_name(centering);
    return os.str();
  }
};

inline std::vector<double> centers_for(const DecimatedFamily& family, std::size_t level, Centering centering) {
  std::vector<double> c;
  for (std::size_t i = 0; i < family.branches(); ++i) {
    c.push_back(centering == Centering::exact ? cov_exact(family, level, i, i, 0, 0)
                                              : limit_cross_cov(family, i, i, 0).value);
  }
  return c;
}

inline ReplicateSet replicate_sums(const DecimatedFamily& family, std::size_t level, std::size_t n,
                                   const NoiseSpec& noise, std::size_t replicates, std::uint64_t base_seed,
                                   Centering centering = Centering::exact) {
  if (replicates < 100) throw std::invalid_argument("replicate_sums: need at least 100 replicates");
  if (n == 0) throw std::invalid_argument("replicate_sums: n must be >= 1");
  ReplicateSet set;
  set.level = level;
  set.gamma = family.gamma(level);
  set.n = n;
  set.noise = noise.name();
  set.base_seed = base_seed;
  set.centering = centering;
  set.centers = centers_for(family, level, centering);
  set.samples.assign(replicates, std::vector<double>(family.branches(), 0.0));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  parallel_for(replicates, [&](std::size_t r) {
    const PathMatrix paths = simulate_decimated(family, level, n, noise, derive_seed(base_seed, r));
    for (std::size_t i = 0; i < paths.branches(); ++i) {
      double acc = 0.0;
      for (double z : paths.values[i]) acc += z * z - set.centers[i];
      set.samples[r][i] = scale * acc;
    }
  });
  return set;
}

/// Sample covariance with leave-one-out jackknife standard errors.
struct CovEstimate {
  std::vector<std::vector<double>> cov;
  std::vector<std::vector<double>> se;
  std::vector<double> means;
  std::vector<bool> degenerate;
  bool any_degenerate = false;
};

inline CovEstimate empirical_cov(const std::vector<std::vector<double>>& samples) {
  const std::size_t r = samples.size();
  if (r < 2) throw std::invalid_argument("empirical_cov: need at least 2 replicates");
  const std::size_t n = samples.front().size();
  const auto rd = static_cast<double>(r);
  CovEstimate est;
  est.means.assign(n, 0.0);
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < n; ++i) est.means[i] += s[i];
  }
  for (auto& m : est.means) m /= rd;
  est.cov.assign(n, std::vector<double>(n, 0.0));
  est.se.assign(n, std::vector<double>(n, 0.0));
  est.degenerate.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ip = i; ip < n; ++ip) {
      // Leave-one-out covariances from running sums of centred data.
      double sx = 0.0;
      double sy = 0.0;
      double sxy = 0.0;
      for (const auto& s : samples) {
        const double x = s[i] - est.means[i];
        const double y = s[ip] - est.means[ip];
        sx += x;
        sy += y;
        sxy += x * y;
      }
      const double c = (sxy - sx * sy / rd) / (rd - 1.0);
      double se = std::numeric_limits<double>::infinity();
      if (r >= 3) {
        double mean_loo = 0.0;
        std::vector<double> loo(r);
        for (std::size_t q = 0; q < r; ++q) {
          const double x = samples[q][i] - est.means[i];
          const double y = samples[q][ip] - est.means[ip];
          loo[q] = (sxy - x * y - (sx - x) * (sy - y) / (rd - 1.0)) / (rd - 2.0);
          mean_loo += loo[q];
        }
        mean_loo /= rd;
        double ss = 0.0;
        for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
        se = std::sqrt((rd - 1.0) / rd * ss);
      }
      est.cov[i][ip] = est.cov[ip][i] = c;
      est.se[i][ip] = est.se[ip][i] = se;
    }
    if (!(est.cov[i][i] > 0.0)) {
      est.degenerate[i] = true;
      est.any_degenerate = true;
    }
  }
  return est;
}

inline CovEstimate empirical_cov(const ReplicateSet& set) { return empirical_cov(set.samples); }

struct NormalityReport {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_distance = 0.0;
  double ks_critical = 0.0;  // 1.63 / sqrt(R), about the 99% quantile
  bool degenerate = false;
  bool non_normal = false;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline NormalityReport normality_report(std::vector<double> x) {
  const std::size_t r = x.size();
  if (r < 2) throw std::invalid_argument("normality_report: need at least 2 samples");
  const auto rd = static_cast<double>(r);
  NormalityReport rep;
  for (double v : x) rep.mean += v;
  rep.mean /= rd;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d = v - rep.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  rep.variance = m2 / (rd - 1.0);
  rep.ks_critical = 1.63 / std::sqrt(rd);
  if (!(m2 > 0.0)) {
    rep.degenerate = true;
    rep.non_normal = true;
    return rep;
  }
  const double sd = std::sqrt(rep.variance);
  rep.skewness = (m3 / rd) / (sd * sd * sd);
  rep.excess_kurtosis = (m4 / rd) / (rep.variance * rep.variance) - 3.0;
  std::sort(x.begin(), x.end());
  double d = 0.0;
  for (std::size_t q = 0; q < r; ++q) {
    const double f = normal_cdf((x[q] - rep.mean) / sd);
    d = std::max({d, f - static_cast<double>(q) / rd, static_cast<double>(q + 1) / rd - f});
  }
  rep.ks_distance = d;
  rep.non_normal = d > rep.ks_critical;
  return rep;
}

inline NormalityReport normality_report(const ReplicateSet& set, std::size_t coord) {
  if (coord >= set.coords()) throw std::out_of_range("normality_report: coordinate out of range");
  std::vector<double> x;
  x.reserve(set.replicates());
  for (const auto& s : set.samples) x.push_back(s[coord]);
  return normality_report(std::move(x));
}

struct LinearFormReport {
  NormalityReport normality;
  double variance = 0.0;
  double variance_se = 0.0;
  double exact_variance = 0.0;
};

/// Normality of the raw coefficient Z_{i,j,0} across replicates, with its variance against the exact sum.
inline LinearFormReport linear_form_clt_check(const DecimatedFamily& family, std::size_t level, const NoiseSpec& noise,
                                              std::size_t replicates, std::uint64_t base_seed, std::size_t branch = 0) {
  if (replicates < 100) throw std::invalid_argument("linear_form_clt_check: need at least 100 replicates");
  std::vector<std::vector<double>> samples(replicates, std::vector<double>(1, 0.0));
  parallel_for(replicates, [&](std::size_t r) {
    const PathMatrix paths = simulate_decimated(family, level, 1, noise, derive_seed(base_seed, r));
    samples[r][0] = paths.values.at(branch)[0];
  });
  LinearFormReport rep;
  const CovEstimate est = empirical_cov(samples);
  rep.variance = est.cov[0][0];
  rep.variance_se = est.se[0][0];
  rep.exact_variance = cov_exact(family, level, branch, branch, 0, 0);
  std::vector<double> x;
  for (const auto& s : samples) x.push_back(s[0]);
  rep.normality = normality_report(std::move(x));
  return rep;
}

struct SweepEntry {
  long gamma = 0;
  std::size_t n = 0;
  std::size_t entry_i = 0;
  std::size_t entry_ip = 0;
  double empirical = 0.0;
  double analytic_n = 0.0;
  std::optional<double> gamma_limit;
  double se = 0.0;
};

/// Per level and branch pair: empirical covariance of square-sums, 2A + kappa_4 B, and Gamma.
inline std::vector<SweepEntry> convergence_sweep(const DecimatedFamily& family, const std::vector<std::size_t>& levels,
                                                 const std::vector<std::size_t>& n_per_level, const NoiseSpec& noise,
                                                 std::size_t replicates, std::uint64_t base_seed,
                                                 Centering centering = Centering::exact) {
  if (n_per_level.size() != levels.size() && n_per_level.size() != 1) {
    throw std::invalid_argument("convergence_sweep: give one n, or one n per level");
  }
  std::optional<GammaMatrix> gm;
  if (family.has_limit()) gm = gamma_matrix(family);
  std::vector<SweepEntry> rows;
  for (std::size_t q = 0; q < levels.size(); ++q) {
    const std::size_t level = levels[q];
    const std::size_t n = n_per_level.size() == 1 ? n_per_level[0] : n_per_level[q];
    const ReplicateSet set = replicate_sums(family, level, n, noise, replicates, base_seed, centering);
    const CovEstimate est = empirical_cov(set);
    for (std::size_t i = 0; i < family.branches(); ++i) {
      for (std::size_t ip = i; ip < family.branches(); ++ip) {
        SweepEntry e;
        e.gamma = family.gamma(level);
        e.n = n;
        e.entry_i = i + 1;
        e.entry_ip = ip + 1;
        e.empirical = est.cov[i][ip];
        e.se = est.se[i][ip];
        e.analytic_n = cov_of_square_sums(family, level, i, ip, n, noise);
        if (gm) e.gamma_limit = gm->entries[i][ip];
        rows.push_back(e);
      }
    }
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepEntry>& rows, const std::string& digest = {}) {
  std::ostringstream os;
  if (!digest.empty()) os << "# digest=" << digest << '\n';
  os << "gamma,n,entry_i,entry_ip,empirical,analytic_n,gamma_limit,se\n";
  for (const auto& r : rows) {
    os << r.gamma << ',' << r.n << ',' << r.entry_i << ',' << r.entry_ip << ',' << format_double(r.empirical) << ','
       << format_double(r.analytic_n) << ',' << (r.gamma_limit ? format_double(*r.gamma_limit) : "NA") << ','
       << format_double(r.se) << '\n';
  }
  out << os.str();
}

inline void write_replicates_csv(std::ostream& out, const ReplicateSet& set, const std::string& digest = {}) {
  std::ostringstream os;
  os << "# " << set.digest();
  if (!digest.empty()) os << " digest=" << digest;
  os << '\n' << "replicate";
  for (std::size_t i = 0; i < set.coords(); ++i) os << ",coord_" << i + 1;
  os << '\n';
  for (std::size_t r = 0; r < set.replicates(); ++r) {
    os << r;
    for (double v : set.samples[r]) os << ',' << format_double(v);
    os << '\n';
  }
  out << os.str();
}

}  // namespace decilab
