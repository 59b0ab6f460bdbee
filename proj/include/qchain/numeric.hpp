#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>

namespace qchain {

inline constexpr double kPi = 3.14159265358979323846;

// 2*pi as a two-double sum; kTwoPiLo is the residual of the double rounding.
inline constexpr double kTwoPiHi = 6.283185307179586;
inline constexpr double kTwoPiLo = 2.449293598294706414e-16;

struct SinCos {
  double c;
  double s;
};

/// w*t reduced modulo 2*pi into [-pi, pi], with the product and the
/// reduction carried in compensated arithmetic. A plain std::cos(w*t)
/// loses ~n ulp of phase once w*t spans n periods; runs here reach
/// w*t ~ 1e5, where that matters at the 1e-12 level.
inline double reduced_angle(double w, double t) {
  const double p = w * t;
  const double p_err = std::fma(w, t, -p);
  const double n = std::nearbyint(p / kTwoPiHi);
  double r = std::fma(-n, kTwoPiHi, p);
  r = std::fma(-n, kTwoPiLo, r);
  return r + p_err;
}

inline SinCos reduced_sincos(double w, double t) {
  const double r = reduced_angle(w, t);
  return {std::cos(r), std::sin(r)};
}

/// Minimal double-double value (~32 significant digits). Used where plain
/// doubles cannot hold a required identity: the Ermakov coefficient
/// transfer amplifies coefficients to ~1e2-1e3 while their invariant
/// combination gamma^2 - alpha^2 - beta^2 stays ~1e-2, so double storage
/// alone already perturbs the invariant by ~gamma^2 * eps.
struct DD {
  double hi = 0.0;
  double lo = 0.0;

  constexpr DD() = default;
  constexpr DD(double h) : hi(h), lo(0.0) {}
  constexpr DD(double h, double l) : hi(h), lo(l) {}
  double value() const { return hi + lo; }
};

namespace ddops {

inline DD two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline DD quick_two_sum(double a, double b) {  // requires |a| >= |b|
  const double s = a + b;
  return {s, b - (s - a)};
}

inline DD two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline DD add(const DD& a, const DD& b) {
  DD s = two_sum(a.hi, b.hi);
  s.lo += a.lo + b.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline DD sub(const DD& a, const DD& b) { return add(a, {-b.hi, -b.lo}); }

inline DD mul(const DD& a, const DD& b) {
  DD p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return quick_two_sum(p.hi, p.lo);
}

inline DD mul(const DD& a, double b) {
  DD p = two_prod(a.hi, b);
  p.lo += a.lo * b;
  return quick_two_sum(p.hi, p.lo);
}

inline DD div(const DD& a, const DD& b) {
  const double q1 = a.hi / b.hi;
  DD r = sub(a, mul(b, q1));
  const double q2 = r.hi / b.hi;
  r = sub(r, mul(b, q2));
  const double q3 = r.hi / b.hi;
  return add(quick_two_sum(q1, q2), q3);
}

inline DD div(const DD& a, double b) { return div(a, DD(b)); }

inline DD sqrt(double a) {
  const double s = std::sqrt(a);
  const DD residual = sub(DD(a), two_prod(s, s));
  return quick_two_sum(s, residual.hi / (2.0 * s));
}

inline DD sqrt(const DD& a) {
  const double s = std::sqrt(a.hi);
  return mul(add(div(a, DD(s)), DD(s)), 0.5);
}

}  // namespace ddops

struct SinCosDD {
  DD c;
  DD s;
};

/// reduced_sincos with the pair renormalized to c^2 + s^2 = 1 in
/// double-double. Plain cos/sin values satisfy the identity only to ~1e-16,
/// which is what bounds any invariant built from them.
inline SinCosDD reduced_sincos_dd(double w, double t) {
  const auto [c, s] = reduced_sincos(w, t);
  using namespace ddops;
  const DD norm = ddops::sqrt(add(two_prod(c, c), two_prod(s, s)));
  return {div(DD(c), norm), div(DD(s), norm)};
}

namespace detail {

inline double adaptive_simpson_step(const std::function<double(double)>& f,
                                    double a, double b, double fa, double fm,
                                    double fb, double whole, double tol,
                                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // the relative term stops refinement at the rounding floor of the panel
  const double threshold = 15.0 * tol + 2e-15 * (std::abs(left) + std::abs(right));
  if (depth <= 0 || std::abs(delta) <= threshold) {
    return left + right + delta / 15.0;
  }
  // tolerance shrinks by 1/sqrt(2) per level, not 1/2: evaluation noise in
  // the panel estimates scales like the panel width, so halving would pin
  // the noise-to-tolerance ratio and refinement could only stop at the
  // depth cap. The sqrt scaling keeps the accumulated error within tol
  // while letting noisy panels terminate.
  const double child_tol = tol * 0.70710678118654752;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, child_tol, depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, child_tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int max_depth = 30) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol,
                                       max_depth);
}

}  // namespace qchain
