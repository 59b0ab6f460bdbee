#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qchain/ermakov.hpp"
#include "qchain/errors.hpp"
#include "qchain/numeric.hpp"
#include "qchain/protocol.hpp"

namespace qchain {

/// Per-mode diagonals of the wavefunction's quadratic forms at one instant:
/// omega_diag = sqrt(lambda_m(0)) / eta_m(t), btilde_diag = eta_dot_m / (4 eta_m)
/// (= b_dot_m / (2 b_m)). The full matrices are U^T diag U in site basis.
struct QuadraticForms {
  Eigen::ArrayXd omega_diag;
  Eigen::ArrayXd btilde_diag;
};

inline QuadraticForms quadratic_forms(const std::vector<ModeSolution>& modes, double t) {
  const int n = static_cast<int>(modes.size());
  QuadraticForms forms;
  forms.omega_diag.resize(n);
  forms.btilde_diag.resize(n);
  for (int i = 0; i < n; ++i) {
    const EtaState s = modes[static_cast<size_t>(i)].eta(t);  // throws if eta <= 0
    forms.omega_diag[i] = std::sqrt(modes[static_cast<size_t>(i)].lambda_initial()) / s.eta;
    forms.btilde_diag[i] = s.eta_dot / (4.0 * s.eta);
  }
  return forms;
}

inline QuadraticForms quadratic_forms(const QuenchProtocol& protocol, double t) {
  return quadratic_forms(propagate_all_modes(protocol), t);
}

/// U^T diag(d) U for an arbitrary mode transform.
inline Eigen::MatrixXd site_matrix(const ModeTransform& transform,
                                   const Eigen::ArrayXd& diag) {
  const Eigen::MatrixXd& u = transform.matrix();
  return u.transpose() * diag.matrix().asDiagonal() * u;
}

/// Same product for the standard cos/sin transform, using that the result
/// is circulant: entry (j, l) depends only on (j - l) mod N. Exact (it is
/// an algebraic identity, not an approximation) but requires the diagonal
/// to respect the mode degeneracy d[m-1] == d[N-m-1].
inline void site_matrix_circulant(const Eigen::ArrayXd& diag, Eigen::MatrixXd& out) {
  const int n = static_cast<int>(diag.size());
  for (int m = 1; 2 * m < n; ++m) {
    if (diag[m - 1] != diag[n - m - 1])
      throw std::invalid_argument(
          "site_matrix_circulant: diagonal breaks the lambda_m = lambda_{N-m} degeneracy");
  }
  Eigen::ArrayXd cos_table(n);
  for (int q = 0; q < n; ++q) cos_table[q] = std::cos((2.0 * kPi * q) / n);
  Eigen::ArrayXd g(n);
  const int pair_max = (n - 1) / 2;
  for (int d = 0; d < n; ++d) {
    double acc = diag[n - 1];
    if (n % 2 == 0) acc += (d % 2 == 0) ? diag[n / 2 - 1] : -diag[n / 2 - 1];
    double pair_acc = 0.0;
    for (int m = 1; m <= pair_max; ++m) pair_acc += diag[m - 1] * cos_table[(m * d) % n];
    g[d] = (acc + 2.0 * pair_acc) / n;
  }
  out.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) out(l, j) = g[std::abs(j - l)];
}

inline Eigen::MatrixXd site_matrix_circulant(const Eigen::ArrayXd& diag) {
  Eigen::MatrixXd out;
  site_matrix_circulant(diag, out);
  return out;
}

/// Parameters of the single-site reduced density matrix
/// rho(x, x') = sqrt((gamma_r - beta_r)/pi) exp[i Z (x^2 - x'^2)]
///              exp[-gamma_r (x^2 + x'^2)/2 + beta_r x x'].
struct RdmParams {
  double Z = 0.0;
  double gamma_r = 1.0;
  double beta_r = 0.0;
};

/// Trace-out of all sites but `site` (1-based) by Schur complement against
/// the (N-1) x (N-1) block of Omega. The three quadratic forms are taken
/// through one Cholesky factorization of the block (never an explicit
/// inverse); the site permutation is index bookkeeping only.
inline RdmParams rdm_params(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& btilde,
                            int site) {
  const int n = static_cast<int>(omega.rows());
  if (n < 2) throw std::invalid_argument("rdm_params: N must be >= 2");
  if (site < 1 || site > n) throw std::invalid_argument("rdm_params: site out of range");
  const int i = site - 1;

  Eigen::MatrixXd block(n - 1, n - 1);
  Eigen::VectorXd omega_col(n - 1), btilde_col(n - 1);
  for (int a = 0, ra = 0; a < n; ++a) {
    if (a == i) continue;
    omega_col[ra] = omega(a, i);
    btilde_col[ra] = btilde(a, i);
    for (int c = 0, rc = 0; c < n; ++c) {
      if (c == i) continue;
      block(ra, rc) = omega(a, c);
      ++rc;
    }
    ++ra;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success)
    throw NumericalError("rdm_params: (N-1) block of Omega is not positive definite");
  // Half-solves keep the quadratic forms exact sums of squares.
  const Eigen::VectorXd y_omega = llt.matrixL().solve(omega_col);
  const Eigen::VectorXd y_btilde = llt.matrixL().solve(btilde_col);
  const double q_oo = y_omega.squaredNorm();
  const double q_ob = y_omega.dot(y_btilde);
  const double q_bb = y_btilde.squaredNorm();

  RdmParams p;
  p.Z = btilde(i, i) - q_ob;
  p.gamma_r = omega(i, i) - 0.5 * q_oo + 2.0 * q_bb;
  p.beta_r = 0.5 * q_oo + 2.0 * q_bb;
  if (!(p.beta_r >= 0.0))
    throw NumericalError("rdm_params: beta_r < 0 (outside the entropy formula's branch)");
  if (!(p.gamma_r - p.beta_r > 0.0) || !(p.gamma_r + p.beta_r > 0.0))
    throw NumericalError("rdm_params: RDM not normalizable (gamma_r - beta_r <= 0)");
  return p;
}

/// Convenience wrapper: assembles the full forms for an arbitrary transform
/// and reduces. The driver uses the circulant assembly instead.
inline RdmParams rdm_params(const ModeTransform& transform, const QuadraticForms& forms,
                            int site) {
  return rdm_params(site_matrix(transform, forms.omega_diag),
                    site_matrix(transform, forms.btilde_diag), site);
}

inline std::complex<double> rdm_element(const RdmParams& p, double x, double xp) {
  const double norm = std::sqrt((p.gamma_r - p.beta_r) / kPi);
  const double re = -0.5 * p.gamma_r * (x * x + xp * xp) + p.beta_r * x * xp;
  const double im = p.Z * (x * x - xp * xp);
  return norm * std::exp(re) * std::complex<double>(std::cos(im), std::sin(im));
}

/// rho(x, x+delta) / rho(x, x). Modulus exp[-(gamma_r-beta_r) x delta
/// - gamma_r delta^2 / 2], independent of Z.
inline std::complex<double> offdiag_ratio(const RdmParams& p, double x, double delta) {
  const double re = -(p.gamma_r - p.beta_r) * x * delta - 0.5 * p.gamma_r * delta * delta;
  const double im = -p.Z * (2.0 * x * delta + delta * delta);
  return std::exp(re) * std::complex<double>(std::cos(im), std::sin(im));
}

/// Second moments of one site, summed over modes (each mode is a pure
/// Gaussian with exponent -(omega_diag - 2i btilde_diag) y^2 / 2).
/// Independent cross-check of the Schur-complement route.
struct SiteCovariance {
  double xx = 0.0;  // <x^2>
  double pp = 0.0;  // <p^2>
  double xp = 0.0;  // <{x,p}>/2
};

inline SiteCovariance covariance_from_modes(const ModeTransform& transform,
                                            const QuadraticForms& forms, int site) {
  const int n = transform.size();
  if (site < 1 || site > n) throw std::invalid_argument("covariance_from_modes: site out of range");
  SiteCovariance cov;
  for (int m = 1; m <= n; ++m) {
    const double w = transform.entry(m, site);
    const double w2 = w * w;
    const double om = forms.omega_diag[m - 1];
    const double bt = forms.btilde_diag[m - 1];
    cov.xx += w2 / (2.0 * om);
    cov.pp += w2 * (om * om + 4.0 * bt * bt) / (2.0 * om);
    cov.xp += w2 * bt / om;
  }
  return cov;
}

/// Symplectic eigenvalue of the one-site covariance matrix,
/// nu = sqrt(<x^2><p^2> - (<{x,p}>/2)^2) = (1/2) sqrt((gamma_r+beta_r)/(gamma_r-beta_r));
/// nu = 1/2 iff the site is pure (beta_r = 0).
inline double symplectic_nu(const RdmParams& p) {
  return 0.5 * std::sqrt((p.gamma_r + p.beta_r) / (p.gamma_r - p.beta_r));
}

}  // namespace qchain
