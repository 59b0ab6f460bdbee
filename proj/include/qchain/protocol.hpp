#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qchain/numeric.hpp"

namespace qchain {

/// Periodic harmonic chain with on-site frequency omega and
/// nearest-neighbour coupling k. This is also the pre-quench Hamiltonian
/// of a QuenchProtocol.
struct ChainSpec {
  int n_sites = 2;
  double omega_initial = 1.0;
  double coupling = 0.0;

  void validate() const {
    if (n_sites < 2) throw std::invalid_argument("ChainSpec: n_sites must be >= 2");
    if (!(omega_initial > 0.0))
      throw std::invalid_argument("ChainSpec: omega_initial must be > 0 (omega = 0 creates a zero mode)");
    if (!(coupling >= 0.0)) throw std::invalid_argument("ChainSpec: coupling must be >= 0");
  }
};

/// lambda_m = omega^2 + 2k - 2k cos(2 pi m / N) for one mode m in 1..N.
/// Computed through q = min(m, N-m) so that the degeneracy
/// lambda_m == lambda_{N-m} holds bitwise, and lambda_N == omega^2 exactly.
inline double mode_lambda(double omega, double coupling, int n_sites, int mode) {
  if (mode < 1 || mode > n_sites) throw std::invalid_argument("mode_lambda: mode out of range");
  const int q = std::min(mode, n_sites - mode);
  const double angle = (2.0 * kPi * q) / n_sites;
  return omega * omega + 2.0 * coupling * (1.0 - std::cos(angle));
}

/// All N normal mode frequencies (squared), index [m-1] for mode m = 1..N.
inline std::vector<double> normal_mode_frequencies(double omega, double coupling,
                                                   int n_sites) {
  if (n_sites < 2) throw std::invalid_argument("normal_mode_frequencies: N must be >= 2");
  if (!(omega > 0.0))
    throw std::invalid_argument("normal_mode_frequencies: omega must be > 0 (mode N would be a zero mode)");
  if (!(coupling >= 0.0))
    throw std::invalid_argument("normal_mode_frequencies: coupling must be >= 0");
  std::vector<double> lambda(static_cast<size_t>(n_sites));
  for (int m = 1; m <= n_sites; ++m) lambda[m - 1] = mode_lambda(omega, coupling, n_sites, m);
  return lambda;
}

/// Dense coupling matrix Sigma of the chain Hamiltonian: diagonal
/// omega^2 + 2k, -k on the (periodic) off-diagonals. For N = 2 the two
/// neighbour couplings land on the same entry.
inline Eigen::MatrixXd coupling_matrix(double omega, double coupling, int n_sites) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n_sites, n_sites);
  for (int j = 0; j < n_sites; ++j) {
    sigma(j, j) = omega * omega + 2.0 * coupling;
    const int right = (j + 1) % n_sites;
    const int left = (j + n_sites - 1) % n_sites;
    sigma(j, right) -= coupling;
    sigma(j, left) -= coupling;
  }
  return sigma;
}

/// Real orthogonal transform whose row m is the normal mode of wavenumber
/// 2 pi m / N. The same matrix diagonalizes the coupling matrix for every
/// (omega, k) pair. Convention for degenerate pairs (fixed for
/// reproducibility): row m (1 <= m < N/2) is sqrt(2/N) cos(2 pi m j / N),
/// row N-m is sqrt(2/N) sin(2 pi m j / N); row N is uniform 1/sqrt(N);
/// for even N, row N/2 alternates (-1)^j / sqrt(N). Sites are j = 1..N.
class ModeTransform {
 public:
  static ModeTransform build(int n_sites) {
    if (n_sites < 2) throw std::invalid_argument("ModeTransform: N must be >= 2");
    const int n = n_sites;
    Eigen::MatrixXd u(n, n);
    const double inv_sqrt_n = 1.0 / std::sqrt(double(n));
    const double pair_norm = std::sqrt(2.0 / n);
    for (int j = 1; j <= n; ++j) u(n - 1, j - 1) = inv_sqrt_n;
    if (n % 2 == 0) {
      for (int j = 1; j <= n; ++j) u(n / 2 - 1, j - 1) = (j % 2 == 0 ? inv_sqrt_n : -inv_sqrt_n);
    }
    const int pair_max = (n - 1) / 2;
    for (int m = 1; m <= pair_max; ++m) {
      for (int j = 1; j <= n; ++j) {
        const double angle = (2.0 * kPi * m * j) / n;
        u(m - 1, j - 1) = pair_norm * std::cos(angle);
        u(n - m - 1, j - 1) = pair_norm * std::sin(angle);
      }
    }
    return ModeTransform(std::move(u));
  }

  /// Wrap an arbitrary orthogonal matrix (rows = modes). Used by tests to
  /// probe basis choices within degenerate pairs.
  static ModeTransform from_matrix(Eigen::MatrixXd u) {
    if (u.rows() != u.cols() || u.rows() < 2)
      throw std::invalid_argument("ModeTransform: matrix must be square, N >= 2");
    return ModeTransform(std::move(u));
  }

  int size() const { return static_cast<int>(u_.rows()); }
  const Eigen::MatrixXd& matrix() const { return u_; }
  /// Entry for mode m, site j (both 1-based).
  double entry(int mode, int site) const { return u_(mode - 1, site - 1); }

 private:
  explicit ModeTransform(Eigen::MatrixXd u) : u_(std::move(u)) {}
  Eigen::MatrixXd u_;
};

/// One constant-parameter stretch of the drive.
struct Segment {
  double omega = 1.0;
  double coupling = 0.0;
  double duration = std::numeric_limits<double>::infinity();
};

/// Piecewise-constant (omega, k) schedule. Segment 0 is the pre-quench
/// Hamiltonian (the ChainSpec), in effect for t < 0 and defining
/// lambda(0); quench i happens at boundary_times()[i-1], after which
/// evolving_segments()[i-1] takes over. An empty evolving list means the
/// chain is never quenched.
class QuenchProtocol {
 public:
  QuenchProtocol(ChainSpec chain, std::vector<Segment> evolving)
      : chain_(chain), evolving_(std::move(evolving)) {
    chain_.validate();
    for (size_t i = 0; i < evolving_.size(); ++i) {
      const Segment& s = evolving_[i];
      if (!(s.omega > 0.0))
        throw std::invalid_argument("QuenchProtocol: every segment omega must be > 0");
      if (!(s.coupling >= 0.0))
        throw std::invalid_argument("QuenchProtocol: segment coupling must be >= 0");
      const bool last = (i + 1 == evolving_.size());
      if (last) {
        if (std::isfinite(s.duration))
          throw std::invalid_argument("QuenchProtocol: last segment must have unbounded duration");
      } else if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
        throw std::invalid_argument("QuenchProtocol: interior segment durations must be positive and finite");
      }
    }
    double t = 0.0;
    for (size_t i = 0; i < evolving_.size(); ++i) {
      boundaries_.push_back(t);
      t += evolving_[i].duration;
    }
  }

  /// The alternating schedule: omega flips between chain.omega_initial and
  /// omega_final every `period` seconds, starting with the quench to
  /// omega_final at t = 0; num_quenches flips in total, the last value
  /// held forever. The coupling never changes.
  static QuenchProtocol periodic(ChainSpec chain, double omega_final, double period,
                                 int num_quenches) {
    if (num_quenches < 0) throw std::invalid_argument("QuenchProtocol: num_quenches must be >= 0");
    if (num_quenches > 0 && !(period > 0.0))
      throw std::invalid_argument("QuenchProtocol: period must be > 0");
    if (!(omega_final > 0.0))
      throw std::invalid_argument("QuenchProtocol: omega_final must be > 0");
    std::vector<Segment> evolving;
    for (int q = 1; q <= num_quenches; ++q) {
      const double omega = (q % 2 == 1) ? omega_final : chain.omega_initial;
      const double duration =
          (q == num_quenches) ? std::numeric_limits<double>::infinity() : period;
      evolving.push_back({omega, chain.coupling, duration});
    }
    return QuenchProtocol(std::move(chain), std::move(evolving));
  }

  const ChainSpec& chain() const { return chain_; }
  int n_sites() const { return chain_.n_sites; }
  /// Total segment count including the pre-quench segment 0.
  int segment_count() const { return static_cast<int>(evolving_.size()) + 1; }
  int quench_count() const { return static_cast<int>(evolving_.size()); }
  const std::vector<Segment>& evolving_segments() const { return evolving_; }
  /// Quench instants t_0 = 0 < t_1 < ...; size quench_count().
  const std::vector<double>& boundary_times() const { return boundaries_; }

  double lambda_initial(int mode) const {
    return mode_lambda(chain_.omega_initial, chain_.coupling, chain_.n_sites, mode);
  }
  std::vector<double> lambdas_initial() const {
    return normal_mode_frequencies(chain_.omega_initial, chain_.coupling, chain_.n_sites);
  }

  struct ScheduleEntry {
    double omega;
    double coupling;
    double start;  // inclusive; entry holds until the next start (last: forever)
  };
  /// The Hamiltonian schedule for t >= 0. For a never-quenched chain this
  /// is the pre-quench Hamiltonian extended to all t >= 0.
  std::vector<ScheduleEntry> schedule() const {
    std::vector<ScheduleEntry> entries;
    if (evolving_.empty()) {
      entries.push_back({chain_.omega_initial, chain_.coupling, 0.0});
      return entries;
    }
    for (size_t i = 0; i < evolving_.size(); ++i)
      entries.push_back({evolving_[i].omega, evolving_[i].coupling, boundaries_[i]});
    return entries;
  }

  /// Parameters in effect at time t >= 0.
  ScheduleEntry parameters_at(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("QuenchProtocol: t must be >= 0");
    const auto entries = schedule();
    size_t idx = 0;
    while (idx + 1 < entries.size() && t >= entries[idx + 1].start) ++idx;
    return entries[idx];
  }

 private:
  ChainSpec chain_;
  std::vector<Segment> evolving_;
  std::vector<double> boundaries_;
};

}  // namespace qchain
