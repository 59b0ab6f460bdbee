#pragma once

// Independent numerical oracles used by tests and the `validate`
// subcommand. None of them reuse the closed-form solution path they check:
// the Ermakov oracle integrates the nonlinear ODE directly, the OTOC
// oracle integrates the Heisenberg equations of the full chain, and the
// trace-out oracle does the (N-1)-dimensional integral by brute-force
// Gauss-Hermite quadrature.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qchain/ermakov.hpp"
#include "qchain/errors.hpp"
#include "qchain/gaussian.hpp"
#include "qchain/numeric.hpp"
#include "qchain/protocol.hpp"

namespace qchain::oracles {

struct ErmakovOdeResult {
  std::vector<EtaState> states;        // one per requested time
  double max_invariant_residual = 0.0; // over all internal steps
};

/// RK4 on b'' + lambda(t) b = lambda(0)/b^3 with b(0) = 1, b'(0) = 0,
/// restarting exactly at every quench boundary. `step` is the base step;
/// near the eta minima of strongly amplified modes the 1/b^3 term makes
/// the equation locally stiff (the effective frequency rises to
/// sqrt(lambda + 3 lambda0/b^4) ~ 1e4-1e5), so the step is shortened
/// there to keep the local phase advance below 2e-4. The state is carried
/// in extended precision: the quench sequence amplifies perturbations by
/// ~1e3, which would push plain-double rounding above the 1e-8 comparison
/// level. Throws if the conserved-quantity residual exceeds 1e-6.
inline ErmakovOdeResult solve_ermakov_ode(const QuenchProtocol& protocol, int mode,
                                          std::span<const double> t_grid,
                                          double step = 2e-5) {
  const long double lambda0 = protocol.lambda_initial(mode);
  const auto schedule = protocol.schedule();
  const int n = protocol.n_sites();
  std::vector<long double> seg_lambda;
  std::vector<double> seg_start;
  for (const auto& e : schedule) {
    seg_lambda.push_back(mode_lambda(e.omega, e.coupling, n, mode));
    seg_start.push_back(e.start);
  }

  std::vector<double> checkpoints(t_grid.begin(), t_grid.end());
  for (double prev = -1.0; const double tc : checkpoints) {
    if (tc < 0.0 || tc < prev) throw std::invalid_argument("solve_ermakov_ode: t_grid must be sorted, >= 0");
    prev = tc;
  }

  ErmakovOdeResult result;
  result.states.reserve(checkpoints.size());

  long double t = 0.0L;
  long double b = 1.0L;
  long double v = 0.0L;
  size_t seg = 0;

  auto accel = [&](long double bb, long double lam) {
    return lambda0 / (bb * bb * bb) - lam * bb;
  };
  auto record_state = [&](long double lam) {
    EtaState s;
    s.eta = static_cast<double>(b * b);
    s.eta_dot = static_cast<double>(2.0L * b * v);
    s.eta_ddot =
        static_cast<double>(2.0L * v * v + 2.0L * lambda0 / (b * b) - 2.0L * lam * b * b);
    return s;
  };
  constexpr long double kMaxPhasePerStep = 2e-4L;
  auto integrate_to = [&](double target) {
    while (t < target) {
      // never step across a segment boundary
      while (seg + 1 < seg_start.size() && t >= seg_start[seg + 1]) ++seg;
      long double stop = target;
      if (seg + 1 < seg_start.size() && seg_start[seg + 1] < stop) stop = seg_start[seg + 1];
      const long double lam = seg_lambda[seg];
      while (t < stop) {
        const long double freq = sqrtl(lam + 3.0L * lambda0 / (b * b * b * b));
        long double h = std::min(static_cast<long double>(step), kMaxPhasePerStep / freq);
        if (t + h >= stop) h = stop - t;
        const long double k1b = v, k1v = accel(b, lam);
        const long double k2b = v + 0.5L * h * k1v, k2v = accel(b + 0.5L * h * k1b, lam);
        const long double k3b = v + 0.5L * h * k2v, k3v = accel(b + 0.5L * h * k2b, lam);
        const long double k4b = v + h * k3v, k4v = accel(b + h * k3b, lam);
        b += h / 6.0L * (k1b + 2.0L * k2b + 2.0L * k3b + k4b);
        v += h / 6.0L * (k1v + 2.0L * k2v + 2.0L * k3v + k4v);
        t += h;
      }
      t = stop;
      const double res = eta_invariant_residual(record_state(lam), static_cast<double>(lam),
                                                static_cast<double>(lambda0));
      result.max_invariant_residual = std::max(result.max_invariant_residual, res);
    }
  };

  for (const double target : checkpoints) {
    integrate_to(target);
    while (seg + 1 < seg_start.size() && target >= seg_start[seg + 1]) ++seg;
    result.states.push_back(record_state(seg_lambda[seg]));
  }
  if (result.max_invariant_residual > 1e-6)
    throw NumericalError("solve_ermakov_ode: invariant residual " +
                         std::to_string(result.max_invariant_residual) +
                         " > 1e-6, step size too coarse");
  return result;
}

/// tau(t) by adaptive quadrature of 1/eta, split at the piece boundaries
/// and chopped into one chunk per oscillation period. The chopping matters:
/// strongly amplified modes have eta_min ~ lambda0/(lambda gamma), so 1/eta
/// is a train of narrow spikes that a single adaptive call resolves poorly.
inline double tau_by_quadrature(const ModeSolution& sol, double t, double tol = 1e-11) {
  if (!(t >= 0.0)) throw std::invalid_argument("tau_by_quadrature: t must be >= 0");
  auto inv_eta = [&](double s) { return 1.0 / sol.eta(s).eta; };

  struct Interval {
    double begin, end, omega_t;
  };
  std::vector<Interval> intervals;
  double begin = 0.0;
  for (int i = 1; i < sol.piece_count() && sol.piece(i).t_start < t; ++i) {
    intervals.push_back({begin, sol.piece(i).t_start, sol.piece(i - 1).omega_t});
    begin = sol.piece(i).t_start;
  }
  if (t > begin)
    intervals.push_back({begin, t, sol.piece(sol.piece_index(t)).omega_t});

  long total_chunks = 0;
  for (const auto& iv : intervals) {
    const double period = kTwoPiHi / iv.omega_t;
    total_chunks += std::max(1L, static_cast<long>(std::ceil((iv.end - iv.begin) / period)));
  }
  const double chunk_tol =
      std::max(tol / static_cast<double>(std::max(1L, total_chunks)), 5e-15);

  double total = 0.0;
  for (const auto& iv : intervals) {
    const double period = kTwoPiHi / iv.omega_t;
    const long chunks = std::max(1L, static_cast<long>(std::ceil((iv.end - iv.begin) / period)));
    const double h = (iv.end - iv.begin) / static_cast<double>(chunks);
    for (long c = 0; c < chunks; ++c) {
      const double a = iv.begin + static_cast<double>(c) * h;
      const double b = (c + 1 == chunks) ? iv.end : a + h;
      total += adaptive_simpson(inv_eta, a, b, chunk_tol, 40);
    }
  }
  return total;
}

/// x-x block of the classical propagator of d/dt (x, p) = (p, -Sigma(t) x),
/// integrated by fixed-step RK4 with restarts at every quench. The OTOC of
/// x_i(t), p_j(0) is the square of entry (i, j) (1-based).
inline Eigen::MatrixXd heisenberg_xx_block(const QuenchProtocol& protocol, double t,
                                           double step = 1e-5) {
  if (!(t >= 0.0)) throw std::invalid_argument("heisenberg_xx_block: t must be >= 0");
  const int n = protocol.n_sites();
  const auto schedule = protocol.schedule();

  Eigen::MatrixXd xx = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd xp = Eigen::MatrixXd::Zero(n, n);   // dx(t)/dp(0)
  Eigen::MatrixXd px = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd pp = Eigen::MatrixXd::Identity(n, n);

  double now = 0.0;
  for (size_t seg = 0; seg < schedule.size() && now < t; ++seg) {
    const double seg_end =
        (seg + 1 < schedule.size()) ? std::min(schedule[seg + 1].start, t) : t;
    if (seg_end <= now) continue;
    const Eigen::MatrixXd sigma =
        coupling_matrix(schedule[seg].omega, schedule[seg].coupling, n);
    const double span = seg_end - now;
    const long nsteps = std::max(1L, static_cast<long>(std::ceil(span / step)));
    const double h = span / static_cast<double>(nsteps);
    Eigen::MatrixXd k1x(n, n), k1p(n, n), k2x(n, n), k2p(n, n), k3x(n, n), k3p(n, n),
        k4x(n, n), k4p(n, n);
    auto rk4 = [&](Eigen::MatrixXd& x, Eigen::MatrixXd& p) {
      k1x = p;                 k1p = -sigma * x;
      k2x = p + 0.5 * h * k1p; k2p = -sigma * (x + 0.5 * h * k1x);
      k3x = p + 0.5 * h * k2p; k3p = -sigma * (x + 0.5 * h * k2x);
      k4x = p + h * k3p;       k4p = -sigma * (x + h * k3x);
      x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    };
    for (long i = 0; i < nsteps; ++i) {
      rk4(xx, px);
      rk4(xp, pp);
    }
    now = seg_end;
  }
  return xx;
}

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule (weight exp(-x^2)) by Golub-Welsch.
inline Quadrature gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    const double off = std::sqrt(0.5 * (i + 1));
    jacobi(i, i + 1) = off;
    jacobi(i + 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  Quadrature q;
  q.nodes.resize(static_cast<size_t>(n));
  q.weights.resize(static_cast<size_t>(n));
  const double sqrt_pi = std::sqrt(kPi);
  for (int i = 0; i < n; ++i) {
    q.nodes[static_cast<size_t>(i)] = es.eigenvalues()[i];
    const double v = es.eigenvectors()(0, i);
    q.weights[static_cast<size_t>(i)] = sqrt_pi * v * v;
  }
  return q;
}

/// rho(x, x') by direct integration of psi(x, y) conj(psi(x', y)) over the
/// other N-1 coordinates with tensor-product Gauss-Hermite quadrature.
/// Exponential cost; intended for N <= 6.
inline std::complex<double> rdm_element_by_traceout(const ModeTransform& transform,
                                                    const QuadraticForms& forms, int site,
                                                    double x, double xp,
                                                    int nodes_per_dim = 32) {
  const int n = transform.size();
  if (n > 8) throw std::invalid_argument("rdm_element_by_traceout: N too large for brute force");
  if (site < 1 || site > n) throw std::invalid_argument("rdm_element_by_traceout: site out of range");

  const Eigen::MatrixXd omega = site_matrix(transform, forms.omega_diag);
  const Eigen::MatrixXd btilde = site_matrix(transform, forms.btilde_diag);

  // log det(Omega) for the wavefunction normalization (det Omega / pi^N)^(1/4)
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw NumericalError("rdm_element_by_traceout: Omega not positive definite");
  double log_det = 0.0;
  for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const double log_norm = 0.25 * (log_det - n * std::log(kPi));

  auto psi = [&](const Eigen::VectorXd& coords) {
    const double re = -0.5 * coords.dot(omega * coords);
    const double im = coords.dot(btilde * coords);
    return std::exp(std::complex<double>(log_norm + re, im));
  };

  // substitute y = Q Lambda^{-1/2} u so the Omega block supplies exactly
  // the Gauss-Hermite weight exp(-u.u)
  const int i = site - 1;
  std::vector<int> rest;
  for (int a = 0; a < n; ++a)
    if (a != i) rest.push_back(a);
  const int dims = n - 1;
  Eigen::MatrixXd block(dims, dims);
  for (int a = 0; a < dims; ++a)
    for (int c = 0; c < dims; ++c) block(a, c) = omega(rest[static_cast<size_t>(a)], rest[static_cast<size_t>(c)]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
  const Eigen::VectorXd scale = es.eigenvalues().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd map = es.eigenvectors() * scale.asDiagonal();
  double log_jacobian = 0.0;
  for (int d = 0; d < dims; ++d) log_jacobian += std::log(scale[d]);

  const Quadrature q = gauss_hermite(nodes_per_dim);
  std::vector<int> digit(static_cast<size_t>(dims), 0);
  Eigen::VectorXd coords_a(n), coords_b(n);
  coords_a[i] = x;
  coords_b[i] = xp;
  std::complex<double> acc = 0.0;
  while (true) {
    Eigen::VectorXd u(dims);
    double log_w = 0.0;
    for (int d = 0; d < dims; ++d) {
      u[d] = q.nodes[static_cast<size_t>(digit[static_cast<size_t>(d)])];
      log_w += std::log(q.weights[static_cast<size_t>(digit[static_cast<size_t>(d)])]);
    }
    const Eigen::VectorXd y = map * u;
    for (int d = 0; d < dims; ++d) {
      coords_a[rest[static_cast<size_t>(d)]] = y[d];
      coords_b[rest[static_cast<size_t>(d)]] = y[d];
    }
    // reinstate exp(+u.u): the weight function is already inside psi psi*
    const double reweight = log_w + u.squaredNorm();
    acc += std::exp(reweight) * psi(coords_a) * std::conj(psi(coords_b));

    int d = 0;
    while (d < dims) {
      if (++digit[static_cast<size_t>(d)] < nodes_per_dim) break;
      digit[static_cast<size_t>(d)] = 0;
      ++d;
    }
    if (d == dims) break;
  }
  return acc * std::exp(log_jacobian);
}

/// Entropy of a one-mode Gaussian state from its symplectic eigenvalue:
/// S = (nu + 1/2) log(nu + 1/2) - (nu - 1/2) log(nu - 1/2).
inline double entropy_from_nu(double nu) {
  if (!(nu >= 0.5)) throw std::domain_error("entropy_from_nu: nu must be >= 1/2");
  const double up = nu + 0.5;
  const double down = nu - 0.5;
  const double second = (down > 0.0) ? down * std::log(down) : 0.0;
  return up * std::log(up) - second;
}

inline double symplectic_entropy(const RdmParams& p) {
  return entropy_from_nu(symplectic_nu(p));
}

}  // namespace qchain::oracles
