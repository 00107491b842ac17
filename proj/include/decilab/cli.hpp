#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "decilab/config.hpp"
#include "decilab/kernels.hpp"
#include "decilab/moments.hpp"
#include "decilab/montecarlo.hpp"
#include "decilab/simulate.hpp"
#include "decilab/specdens.hpp"
#include "decilab/window.hpp"

namespace decilab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitHypothesis = 3;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"gamma", "simulate", "cov-check", "clt", "specdens", "sweep"};
  return names;
}

struct Invocation {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "run.seed",          "run.n",           "run.replicates",      "run.noise",           "run.centering",
      "run.level",         "run.levels",      "run.out",             "family.type",         "family.window_order",
      "family.gammas",     "family.modulations", "family.source",    "family.phi",          "family.kernels",
      "family.frequencies", "family.decay",   "specdens.input",      "specdens.source",     "specdens.phi",
      "specdens.n",        "specdens.gamma",  "specdens.gammas",     "specdens.window_order", "specdens.rate_threshold"};
  return keys;
}

/// Resolved experiment: the parsed file plus flag overrides.
class Experiment {
 public:
  Experiment(const Invocation& inv) : command_(inv.command), cfg_(ConfigFile::load(inv.config_path)) {
    bool known = false;
    for (const auto& c : commands()) known = known || c == command_;
    if (!known) throw ConfigError("unknown command '" + command_ + "'");
    base_dir_ = std::filesystem::path(inv.config_path).parent_path();
    if (inv.seed) cfg_.set("run.seed", std::to_string(*inv.seed));
    if (inv.out_dir) cfg_.set("run.out", *inv.out_dir);
    cfg_.require_known(known_keys());
    seed_ = cfg_.get_u64("run.seed", 1);
    out_dir_ = cfg_.get_string("run.out", "out");
    std::string text = "command=" + command_ + "\n";
    for (const auto& [key, entry] : cfg_.entries()) {
      if (key != "run.out") text += key + "=" + entry.value + "\n";
    }
    digest_ = fnv1a_hex(text);
  }

  const std::string& command() const { return command_; }
  const ConfigFile& config() const { return cfg_; }
  const std::string& digest() const { return digest_; }
  std::uint64_t seed() const { return seed_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir_.empty() ? path : base_dir_ / path;
  }

  std::size_t positive(const std::string& key, long fallback) const {
    const long v = cfg_.get_long(key, fallback);
    if (v < 1) cfg_.fail(key, "must be a positive integer");
    return static_cast<std::size_t>(v);
  }

  NoiseSpec noise() const {
    const std::string name = cfg_.get_string("run.noise", "gaussian");
    try {
      return NoiseSpec::parse(name);
    } catch (const std::invalid_argument& e) {
      cfg_.fail("run.noise", e.what());
    }
  }

  Centering centering() const {
    const std::string name = cfg_.get_string("run.centering", "exact");
    try {
      return parse_centering(name);
    } catch (const std::invalid_argument& e) {
      cfg_.fail("run.centering", e.what());
    }
  }

  Window window(const std::string& key) const {
    const long order = cfg_.get_long(key, 4);
    if (order < 1) cfg_.fail(key, "window order must be >= 1");
    if (order < 3) {
      throw HypothesisError(cfg_.origin() + ":" + std::to_string(cfg_.line_of(key)) + ": window order " +
                            std::to_string(order) + " gives decay beta = " + std::to_string(order) +
                            " <= 2, outside the estimator hypotheses");
    }
    return make_bspline_window(static_cast<int>(order));
  }

  std::vector<long> gammas(const std::string& key, bool need_even) const {
    const auto g = cfg_.get_long_list(key);
    if (g.empty()) cfg_.fail(key, "at least one gamma required");
    for (std::size_t q = 0; q < g.size(); ++q) {
      if (g[q] < 1) cfg_.fail(key, "gamma values must be positive");
      if (need_even && g[q] % 2 != 0) cfg_.fail(key, "gamma values must be even");
      if (q > 0 && g[q] <= g[q - 1]) cfg_.fail(key, "gamma values must be strictly increasing");
    }
    return g;
  }

  TimeKernel source_kernel(const std::string& source_key, const std::string& phi_key) const {
    const std::string source = cfg_.get_string(source_key, "white");
    if (source == "white") return TimeKernel::impulse();
    if (source == "ar1") {
      const double phi = cfg_.get_double(phi_key, 0.5);
      if (!(std::abs(phi) < 1.0)) cfg_.fail(phi_key, "AR(1) coefficient must satisfy |phi| < 1");
      return ar1_kernel(phi).kernel;
    }
    cfg_.fail(source_key, "unknown source '" + source + "' (expected white or ar1)");
  }

  DecimatedFamily family() const {
    if (!cfg_.has("family.type")) cfg_.fail(0, "missing [family] type");
    const std::string type = cfg_.get_string("family.type", "");
    if (type == "kernel_files") return kernel_file_family();
    const auto g = gammas("family.gammas", true);
    const Window w = window("family.window_order");
    if (type == "moving_average") return make_scaled_window_family(w, g, 0.0);
    if (type == "two_frequency") return make_scaled_window_family(w, g, std::vector<double>{0.0, kPi / 2.0});
    if (type == "scaled_window") {
      const auto mods = cfg_.get_double_list("family.modulations");
      if (mods.empty()) cfg_.fail("family.modulations", "at least one modulation frequency required");
      for (double f : mods) {
        if (!(f >= 0.0 && f < kPi)) cfg_.fail("family.modulations", "frequencies must lie in [0, pi)");
      }
      return make_scaled_window_family(w, g, mods);
    }
    if (type == "pipeline") return window_pipeline_family(w, source_kernel("family.source", "family.phi"), g);
    cfg_.fail("family.type", "unknown family type '" + type + "'");
  }

  std::size_t level(const DecimatedFamily& fam) const {
    const long lv = cfg_.get_long("run.level", static_cast<long>(fam.level_count()) - 1);
    if (lv < 0 || static_cast<std::size_t>(lv) >= fam.level_count()) {
      cfg_.fail("run.level", "level index out of range (family has " + std::to_string(fam.level_count()) + " levels)");
    }
    return static_cast<std::size_t>(lv);
  }

  std::vector<std::size_t> levels(const DecimatedFamily& fam) const {
    std::vector<std::size_t> out;
    for (long lv : cfg_.get_long_list("run.levels")) {
      if (lv < 0 || static_cast<std::size_t>(lv) >= fam.level_count()) cfg_.fail("run.levels", "level index out of range");
      out.push_back(static_cast<std::size_t>(lv));
    }
    if (out.empty()) {
      for (std::size_t j = 0; j < fam.level_count(); ++j) out.push_back(j);
    }
    return out;
  }

 private:
  DecimatedFamily kernel_file_family() const {
    const auto files = cfg_.get_list("family.kernels");
    if (files.empty()) cfg_.fail("family.kernels", "at least one kernel file required");
    const auto g = gammas("family.gammas", false);
    if (g.size() != 1) cfg_.fail("family.gammas", "kernel_files families take exactly one gamma");
    FamilyLevel lv;
    lv.gamma = g.front();
    for (const auto& f : files) {
      const auto path = resolve(f);
      if (!std::filesystem::exists(path)) cfg_.fail("family.kernels", "kernel file not found: " + path.string());
      try {
        lv.kernels.push_back(read_kernel_file(path.string()));
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }
    auto freqs = cfg_.get_double_list("family.frequencies");
    if (freqs.empty()) freqs.assign(files.size(), 0.0);
    if (freqs.size() != files.size()) cfg_.fail("family.frequencies", "one frequency per kernel file required");
    for (double f : freqs) {
      if (!(f >= 0.0 && f < kPi)) cfg_.fail("family.frequencies", "frequencies must lie in [0, pi)");
    }
    lv.center_freqs = freqs;
    const double decay = cfg_.get_double("family.decay", 1.0);
    if (!(decay > 0.5)) cfg_.fail("family.decay", "decay exponent must exceed 1/2");
    return DecimatedFamily({lv}, freqs, decay);
  }

  std::string command_;
  ConfigFile cfg_;
  std::filesystem::path base_dir_;
  std::uint64_t seed_ = 1;
  std::filesystem::path out_dir_;
  std::string digest_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

inline int run_gamma(const Experiment& ex, std::ostream& out) {
  const DecimatedFamily fam = ex.family();
  if (!fam.has_limit()) throw ConfigError(ex.config().origin() + ": gamma needs a family with limit responses");
  const GammaMatrix g = gamma_matrix(fam);
  const std::string header = "command=gamma digest=" + ex.digest();
  write_file(ex.out_dir() / "gamma.csv", render([&](std::ostream& os) { write_matrix_csv(os, g.entries, header); }));
  write_file(ex.out_dir() / "gamma_bounds.csv", render([&](std::ostream& os) { write_matrix_csv(os, g.bounds, header); }));
  out << "digest = " << ex.digest() << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t ip = 0; ip < g.size(); ++ip) {
      out << "gamma_" << i + 1 << '_' << ip + 1 << " = " << format_double(g.entries[i][ip]) << "  (C = " << g.constants[i][ip]
          << ", bound " << format_double(g.bounds[i][ip]) << ")\n";
    }
  }
  out << "min_eigenvalue = " << format_double(g.min_eigenvalue) << '\n';
  return kExitOk;
}

inline int run_simulate(const Experiment& ex, std::ostream& out) {
  const DecimatedFamily fam = ex.family();
  const std::size_t level = ex.level(fam);
  const std::size_t n = ex.positive("run.n", 64);
  const PathMatrix paths = simulate_decimated(fam, level, n, ex.noise(), ex.seed());
  write_file(ex.out_dir() / "paths.csv", render([&](std::ostream& os) { write_paths_csv(os, paths, ex.digest()); }));
  out << "digest = " << ex.digest() << "\nlevel = " << level << "\ngamma = " << paths.gamma << "\nn = " << n << '\n';
  return kExitOk;
}

inline int run_sweep_levels(const Experiment& ex, std::ostream& out, const std::vector<std::size_t>& levels,
                            const std::string& file) {
  const DecimatedFamily fam = ex.family();
  const std::size_t n = ex.positive("run.n", 64);
  const std::size_t reps = ex.positive("run.replicates", 1000);
  const auto rows = convergence_sweep(fam, levels, {n}, ex.noise(), reps, ex.seed(), ex.centering());
  write_file(ex.out_dir() / file, render([&](std::ostream& os) { write_sweep_csv(os, rows, ex.digest()); }));
  out << "digest = " << ex.digest() << '\n';
  for (const auto& r : rows) {
    const double z = r.se > 0.0 ? (r.empirical - r.analytic_n) / r.se : 0.0;
    out << "gamma=" << r.gamma << " entry=(" << r.entry_i << ',' << r.entry_ip << ") empirical=" << format_double(r.empirical)
        << " analytic=" << format_double(r.analytic_n) << " z=" << format_double(z) << '\n';
  }
  return kExitOk;
}

inline int run_cov_check(const Experiment& ex, std::ostream& out) {
  const DecimatedFamily fam = ex.family();
  return run_sweep_levels(ex, out, {ex.level(fam)}, "cov_check.csv");
}

inline int run_sweep(const Experiment& ex, std::ostream& out) {
  const DecimatedFamily fam = ex.family();
  return run_sweep_levels(ex, out, ex.levels(fam), "sweep.csv");
}

inline int run_clt(const Experiment& ex, std::ostream& out) {
  const DecimatedFamily fam = ex.family();
  const std::size_t level = ex.level(fam);
  const std::size_t n = ex.positive("run.n", 64);
  const std::size_t reps = ex.positive("run.replicates", 1000);
  const ReplicateSet set = replicate_sums(fam, level, n, ex.noise(), reps, ex.seed(), ex.centering());
  write_file(ex.out_dir() / "replicates.csv", render([&](std::ostream& os) { write_replicates_csv(os, set, ex.digest()); }));
  std::ostringstream rep;
  rep << "digest = " << ex.digest() << '\n' << "replicates = " << reps << '\n';
  for (std::size_t i = 0; i < set.coords(); ++i) {
    const NormalityReport nr = normality_report(set, i);
    const std::string p = "coord_" + std::to_string(i + 1) + ".";
    rep << p << "mean = " << format_double(nr.mean) << '\n'
        << p << "variance = " << format_double(nr.variance) << '\n'
        << p << "skewness = " << format_double(nr.skewness) << '\n'
        << p << "excess_kurtosis = " << format_double(nr.excess_kurtosis) << '\n'
        << p << "ks_distance = " << format_double(nr.ks_distance) << '\n'
        << p << "ks_critical_99 = " << format_double(nr.ks_critical) << '\n'
        << p << "degenerate = " << (nr.degenerate ? "true" : "false") << '\n'
        << p << "non_normal = " << (nr.non_normal ? "true" : "false") << '\n';
  }
  write_file(ex.out_dir() / "normality.txt", rep.str());
  out << rep.str();
  return kExitOk;
}

inline int run_specdens(const Experiment& ex, std::ostream& out) {
  const auto& cfg = ex.config();
  const Window w = ex.window("specdens.window_order");
  std::vector<double> x;
  std::optional<double> target;
  std::string origin;
  if (const auto input = cfg.find("specdens.input")) {
    const auto path = ex.resolve(*input);
    std::ifstream in(path);
    if (!in) cfg.fail("specdens.input", "cannot open series file " + path.string());
    try {
      x = read_series(in, path.string());
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
    origin = "file";
  } else {
    const TimeKernel a = ex.source_kernel("specdens.source", "specdens.phi");
    const std::size_t n = ex.positive("specdens.n", 65536);
    x = simulate_linear_process(a, n, NoiseSpec{}, ex.seed());
    const cdouble a0 = eval_response(a, 0.0);
    target = std::norm(a0);
    origin = cfg.get_string("specdens.source", "white");
  }
  const double threshold = cfg.get_double("specdens.rate_threshold", 0.1);
  const long gamma = cfg.get_long("specdens.gamma", 32);
  if (gamma < 2 || gamma % 2 != 0) cfg.fail("specdens.gamma", "gamma must be an even integer >= 2");
  if (x.size() < static_cast<std::size_t>(gamma)) cfg.fail("specdens.gamma", "series shorter than gamma");
  const SpecEstimate e = estimate_f0(x, w, gamma, threshold);
  std::ostringstream rep;
  rep << "digest = " << ex.digest() << '\n'
      << "source = " << origin << '\n'
      << "window = " << w.name() << '\n'
      << "n = " << e.n << '\n'
      << "gamma = " << e.gamma << '\n'
      << "n_j = " << e.n_j << '\n'
      << "f0_hat = " << format_double(e.f0_hat) << '\n'
      << "sigma2_plugin = " << format_double(e.sigma2) << '\n'
      << "se = " << format_double(e.se) << '\n'
      << "bias_order = " << format_double(e.bias_order) << '\n'
      << "rate_value = " << format_double(e.rate_value) << '\n'
      << "rate_ok = " << (e.rate_ok ? "true" : "false") << '\n'
      << "degenerate = " << (e.degenerate ? "true" : "false") << '\n'
      << "reference_white_noise_f0 = " << format_double(1.0 / kTwoPi) << '\n';
  if (target) rep << "target_f0 = " << format_double(*target) << '\n';
  write_file(ex.out_dir() / "specdens_report.txt", rep.str());
  out << rep.str();
  if (cfg.has("specdens.gammas")) {
    std::vector<SweepRow> rows;
    for (long g : ex.gammas("specdens.gammas", true)) {
      if (x.size() < static_cast<std::size_t>(g)) cfg.fail("specdens.gammas", "series shorter than gamma " + std::to_string(g));
      const SpecEstimate s = estimate_f0(x, w, g, threshold);
      rows.push_back({g, s.f0_hat, s.se, s.rate_value});
    }
    write_file(ex.out_dir() / "specdens_sweep.csv",
               render([&](std::ostream& os) { write_specdens_sweep_csv(os, rows, ex.digest()); }));
  }
  return kExitOk;
}

/// Runs one command; diagnostics go to err, reports to out.
inline int run(const Invocation& inv, std::ostream& out, std::ostream& err) {
  try {
    const Experiment ex(inv);
    const std::string& c = ex.command();
    if (c == "gamma") return run_gamma(ex, out);
    if (c == "simulate") return run_simulate(ex, out);
    if (c == "cov-check") return run_cov_check(ex, out);
    if (c == "clt") return run_clt(ex, out);
    if (c == "specdens") return run_specdens(ex, out);
    return run_sweep(ex, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const HypothesisError& e) {
    err << "hypothesis gate: " << e.what() << '\n';
    return kExitHypothesis;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace decilab::cli
