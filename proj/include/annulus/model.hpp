// Closed-form quantities of the radial-stretching energy: derivative norms,
// Jacobian, the integrand L(s,H,K) with its partials, the equilibrium
// coefficient M, and the reduced-flow right-hand side G = -(U+V)/W.
//
// The equation of equilibrium used throughout is
//
//     Hdd = (H - s*K) * M(s,H,K),        K = Hdot,  M > 0,
//
// with M = (I + II)/III re-derived from L by direct differentiation
// (see docs/equilibrium.md and scripts/derive_equilibrium.py).  In the
// reduced variables t = H/s, y = K this becomes F'(t) = G(t,F) = -s^2 M < 0.
#pragma once

#include <cmath>
#include <stdexcept>

#include "annulus/problem.hpp"

namespace annulus {

/// A point (radius, target radius, slope) with s>0, H>0, K>0.
struct EvalPoint {
  double s, H, K;
};

/// A point (t, y) = (H/s, F(t)) of the reduced phase plane, t>0, y>0.
struct ReducedPoint {
  double t, y;
};

/// |Dh|^2 = (n-1) H^2/s^2 + K^2.
inline double grad_norm_sq(const EvalPoint& p, int n) {
  return (n - 1) * p.H * p.H / (p.s * p.s) + p.K * p.K;
}

/// J_h = K (H/s)^{n-1}.
inline double jacobian(const EvalPoint& p, int n) {
  return p.K * detail::pow_int(p.H / p.s, n - 1);
}

/// |Dh^{-1}(h(x))|^2 = 1/K^2 + (n-1) s^2/H^2.
inline double inv_norm_sq(const EvalPoint& p, int n) {
  return 1.0 / (p.K * p.K) + (n - 1) * p.s * p.s / (p.H * p.H);
}

/// a s^{n-1} |Dh|^n, the n-energy piece of the integrand.
inline double energy_term(const EvalPoint& p, const Problem& pb) {
  return pb.a * detail::pow_int(p.s, pb.n - 1) * detail::pow_half(grad_norm_sq(p, pb.n), pb.n);
}

/// b H^{n-1} |Dh^{-1}|^n K, the distortion piece pulled back to the domain.
inline double distortion_term(const EvalPoint& p, const Problem& pb) {
  return pb.b * detail::pow_int(p.H, pb.n - 1) * detail::pow_half(inv_norm_sq(p, pb.n), pb.n) *
         p.K;
}

inline double lagrangian(const EvalPoint& p, const Problem& pb) {
  return energy_term(p, pb) + distortion_term(p, pb);
}

/// dL/dK.
inline double lagrangian_dK(const EvalPoint& p, const Problem& pb) {
  const int n = pb.n;
  const double P = grad_norm_sq(p, n);
  const double Q = inv_norm_sq(p, n);
  const double Pn2 = detail::pow_half(P, n - 2);
  const double Qn2 = detail::pow_half(Q, n - 2);
  const double Qn = Qn2 * Q;
  return pb.a * n * p.K * detail::pow_int(p.s, n - 1) * Pn2 +
         pb.b * detail::pow_int(p.H, n - 1) * (Qn - n * Qn2 / (p.K * p.K));
}

/// dL/dH.
inline double lagrangian_dH(const EvalPoint& p, const Problem& pb) {
  const int n = pb.n;
  const double P = grad_norm_sq(p, n);
  const double Q = inv_norm_sq(p, n);
  const double Pn2 = detail::pow_half(P, n - 2);
  const double Qn2 = detail::pow_half(Q, n - 2);
  const double Qn = Qn2 * Q;
  return pb.a * n * (n - 1) * p.H * detail::pow_int(p.s, n - 3) * Pn2 +
         pb.b * (n - 1) * detail::pow_int(p.H, n - 2) * p.K *
             (Qn - n * p.s * p.s * Qn2 / (p.H * p.H));
}

/// d2L/dK2 = n(n-1)(H^2+s^2K^2) [ a s A1^{(n-4)/2} + b H A2^{(n-4)/2} / K^{n+1} ],
/// A1 = (n-1)H^2 + s^2K^2, A2 = (n-1)s^2K^2 + H^2.  Positive everywhere.
inline double lagrangian_d2KK(const EvalPoint& p, const Problem& pb) {
  const int n = pb.n;
  const double s2 = p.s * p.s, H2 = p.H * p.H, K2 = p.K * p.K;
  const double A1 = (n - 1) * H2 + s2 * K2;
  const double A2 = (n - 1) * s2 * K2 + H2;
  return n * (n - 1) * (H2 + s2 * K2) *
         (pb.a * p.s * detail::pow_half(A1, n - 4) +
          pb.b * p.H * detail::pow_half(A2, n - 4) / detail::pow_int(p.K, n + 1));
}

struct UVW {
  double U, V, W;
};

/// The three reduced-flow building blocks at (t,y).
inline UVW uvw(const ReducedPoint& q, const Problem& pb) {
  if (!(q.t > 0.0) || !(q.y > 0.0))
    throw std::domain_error("uvw: require t > 0 and y > 0");
  const int n = pb.n;
  const double t2 = q.t * q.t, y2 = q.y * q.y;
  const double B1 = (n - 1) * t2 + y2;
  const double B2 = (n - 1) * y2 + t2;
  const double B1e = detail::pow_half(B1, n - 4);
  const double B2e = detail::pow_half(B2, n - 4);
  UVW out;
  out.U = pb.a * B1e * ((n - 1) * t2 + (n - 2) * q.t * q.y + y2);
  out.V = pb.b * B2e * (t2 + (n - 2) * q.t * q.y + (n - 1) * y2) /
          (q.t * detail::pow_int(q.y, n - 1));
  out.W = (t2 + y2) * (pb.a * B1e + pb.b * q.t * B2e / detail::pow_int(q.y, n + 1));
  return out;
}

/// G(t,y) = -(U+V)/W < 0, the right-hand side of the reduced flow F' = G(t,F).
inline double g_rhs(const ReducedPoint& q, const Problem& pb) {
  const UVW c = uvw(q, pb);
  return -(c.U + c.V) / c.W;
}

/// Equilibrium coefficient M(s,H,K) = (I+II)/III > 0, so that
/// Hdd = (H - s K) M.  Satisfies s^2 M(s,H,K) = -G(H/s, K) identically.
inline double m_coeff(const EvalPoint& p, const Problem& pb) {
  const int n = pb.n;
  const double s2 = p.s * p.s, H2 = p.H * p.H, K2 = p.K * p.K;
  const double A1 = (n - 1) * H2 + s2 * K2;
  const double A2 = (n - 1) * s2 * K2 + H2;
  const double A1e = detail::pow_half(A1, n - 4);
  const double A2e = detail::pow_half(A2, n - 4);
  const double sHK = p.s * p.H * p.K;
  const double I = pb.a / p.s * A1e * ((n - 1) * H2 + (n - 2) * sHK + s2 * K2);
  const double II = pb.b / p.H * A2e * detail::pow_int(p.K, 1 - n) *
                    (H2 + (n - 2) * sHK + (n - 1) * s2 * K2);
  const double III =
      (H2 + s2 * K2) * (pb.a * p.s * A1e + pb.b * p.H * A2e / detail::pow_int(p.K, n + 1));
  return (I + II) / III;
}

/// Planar (n=2) equilibrium coefficient in the alternative closed form
/// coef = K^2 (w1 H K + w2 s) / (s^2 H (w1 K^3 + w2)), kept as a cross-check
/// formula for the verify command; see docs/equilibrium.md.
inline double planar_coeff_variant(const EvalPoint& p, double w1, double w2) {
  const double K3 = p.K * p.K * p.K;
  return p.K * p.K * (w1 * p.H * p.K + w2 * p.s) / (p.s * p.s * p.H * (w1 * K3 + w2));
}

}  // namespace annulus
