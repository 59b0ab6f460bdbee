#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qchain/ermakov.hpp"
#include "qchain/gaussian.hpp"
#include "qchain/protocol.hpp"

namespace qchain {

/// n(p, t): Gaussian of variance (gamma_r^2 - beta_r^2 + 4 Z^2) / (2 (gamma_r - beta_r)),
/// normalized to 1.
inline double momentum_variance(const RdmParams& p) {
  const double gm = p.gamma_r - p.beta_r;
  return (p.gamma_r * p.gamma_r - p.beta_r * p.beta_r + 4.0 * p.Z * p.Z) / (2.0 * gm);
}

inline double momentum_distribution(const RdmParams& p, double momentum) {
  const double gm = p.gamma_r - p.beta_r;
  const double denom = p.gamma_r * p.gamma_r - p.beta_r * p.beta_r + 4.0 * p.Z * p.Z;
  return std::sqrt(gm / (kPi * denom)) * std::exp(-momentum * momentum * gm / denom);
}

inline double xi_parameter(const RdmParams& p) {
  // beta/(gamma + sqrt(gamma^2 - beta^2)), stable for beta -> 0 and beta -> gamma
  const double root = std::sqrt((p.gamma_r - p.beta_r) * (p.gamma_r + p.beta_r));
  return p.beta_r / (p.gamma_r + root);
}

/// Von Neumann entropy of the single-site RDM (natural log):
/// S = -log(1 - xi) - xi/(1 - xi) log(xi), xi as above. S = 0 iff beta_r = 0.
inline double entanglement_entropy(const RdmParams& p) {
  if (!(p.beta_r >= 0.0) || !(p.beta_r < p.gamma_r))
    throw std::domain_error("entanglement_entropy: requires 0 <= beta_r < gamma_r");
  const double xi = xi_parameter(p);
  if (xi <= 0.0) return 0.0;
  return -std::log1p(-xi) - xi / (1.0 - xi) * std::log(xi);
}

/// Squared commutator coefficient F(l, t) = <[x_i(t), p_j(0)]^2> with hbar = 1:
/// F = (sum_m U_{mi} U_{mj} b_m(t) cos(sqrt(lambda_m(0)) tau_m(t)))^2.
/// State-independent: the commutator of quadratic dynamics is a c-number.
/// The mode sum runs in fixed order for bit reproducibility.
inline double otoc_value(const ModeTransform& transform,
                         const std::vector<ModeSolution>& modes, int site_i, int site_j,
                         double t) {
  const int n = transform.size();
  if (site_i < 1 || site_i > n || site_j < 1 || site_j > n)
    throw std::invalid_argument("otoc_value: site out of range");
  double acc = 0.0;
  for (int m = 1; m <= n; ++m) {
    const ModeSolution& sol = modes[static_cast<size_t>(m - 1)];
    const double bm = std::sqrt(sol.eta(t).eta);
    const double phase = std::sqrt(sol.lambda_initial()) * sol.tau(t);
    acc += transform.entry(m, site_i) * transform.entry(m, site_j) * bm * std::cos(phase);
  }
  return acc * acc;
}

inline double otoc(const QuenchProtocol& protocol, int site_i, int site_j, double t) {
  return otoc_value(ModeTransform::build(protocol.n_sites()),
                    propagate_all_modes(protocol), site_i, site_j, t);
}

struct WindowStats {
  double mean = 0.0;
  double stddev = 0.0;
  size_t count = 0;
};

/// Mean and (population) standard deviation of y over samples with
/// t in [t_begin, t_end].
inline WindowStats window_stats(std::span<const double> t, std::span<const double> y,
                                double t_begin, double t_end) {
  if (t.size() != y.size()) throw std::invalid_argument("window_stats: size mismatch");
  WindowStats stats;
  double sum = 0.0;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t_begin && t[i] <= t_end) {
      sum += y[i];
      ++stats.count;
    }
  }
  if (stats.count == 0) throw std::invalid_argument("window_stats: empty window");
  stats.mean = sum / static_cast<double>(stats.count);
  double ss = 0.0;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t_begin && t[i] <= t_end) {
      const double d = y[i] - stats.mean;
      ss += d * d;
    }
  }
  stats.stddev = std::sqrt(ss / static_cast<double>(stats.count));
  return stats;
}

struct RecurrenceOptions {
  double baseline_begin = 0.25;  // fractions of the series span
  double baseline_end = 0.5;
  double search_begin = 0.5;
  double smooth_fraction = 0.004;
  double sigma_factor = 5.0;     // peak must clear baseline mean + this * sigma
  double height_fraction = 0.3;  // ... and this fraction of the tallest deviation
};

/// First late-time local maximum of |F - F_sat| after saturation, where
/// F_sat is the mean over the baseline window. Returns the peak time, or
/// nullopt when no deviation clears the thresholds (expected for large N
/// within a short window).
inline std::optional<double> recurrence_time_estimate(std::span<const double> t,
                                                      std::span<const double> f,
                                                      const RecurrenceOptions& opt = {}) {
  const size_t n = t.size();
  if (f.size() != n) throw std::invalid_argument("recurrence_time_estimate: size mismatch");
  if (n < 32) throw std::invalid_argument("recurrence_time_estimate: series too short");

  const size_t b0 = static_cast<size_t>(opt.baseline_begin * static_cast<double>(n));
  const size_t b1 = static_cast<size_t>(opt.baseline_end * static_cast<double>(n));
  double f_sat = 0.0;
  for (size_t i = b0; i < b1; ++i) f_sat += f[i];
  f_sat /= static_cast<double>(b1 - b0);

  // moving-average smoothing of the deviation
  const size_t w = std::max<size_t>(1, static_cast<size_t>(opt.smooth_fraction * n));
  std::vector<double> prefix(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + std::abs(f[i] - f_sat);
  std::vector<double> dev(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t lo = (i >= w) ? i - w : 0;
    const size_t hi = std::min(n, i + w + 1);
    dev[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }

  double base_mean = 0.0;
  for (size_t i = b0; i < b1; ++i) base_mean += dev[i];
  base_mean /= static_cast<double>(b1 - b0);
  double base_var = 0.0;
  for (size_t i = b0; i < b1; ++i) base_var += (dev[i] - base_mean) * (dev[i] - base_mean);
  const double base_sigma = std::sqrt(base_var / static_cast<double>(b1 - b0));

  const size_t s0 = static_cast<size_t>(opt.search_begin * static_cast<double>(n));
  double tallest = 0.0;
  for (size_t i = s0; i < n; ++i) tallest = std::max(tallest, dev[i]);
  const double threshold = std::max(base_mean + opt.sigma_factor * base_sigma,
                                    opt.height_fraction * tallest);

  for (size_t i = std::max<size_t>(s0, 1); i + 1 < n; ++i) {
    if (dev[i] >= threshold && dev[i] >= dev[i - 1] && dev[i] > dev[i + 1])
      return t[i];
  }
  return std::nullopt;
}

/// One output record of the simulation driver; unset fields correspond to
/// observables that were not requested and print as empty CSV cells.
struct ObservableSample {
  double t = 0.0;
  std::optional<double> gamma_r;
  std::optional<double> gamma_minus_beta;
  std::optional<double> Z;
  std::optional<double> entropy;
  std::optional<double> n0;
  std::optional<double> otoc;
  std::optional<double> abs_ratio;
};

}  // namespace qchain
