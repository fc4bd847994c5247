// Problem instance: dimension, annulus geometry, energy weights.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace annulus {

inline constexpr double pi = 3.14159265358979323846264338328;

namespace detail {

/// x^p by binary exponentiation, p any integer.
inline double pow_int(double x, int p) {
  if (p < 0) return 1.0 / pow_int(x, -p);
  double r = 1.0;
  double base = x;
  unsigned e = static_cast<unsigned>(p);
  while (e) {
    if (e & 1u) r *= base;
    base *= base;
    e >>= 1u;
  }
  return r;
}

/// x^(h/2) for integer h and x > 0. Half-integer powers are the only
/// non-integer exponents that occur for integer dimension n.
inline double pow_half(double x, int h) {
  if (h % 2 == 0) return pow_int(x, h / 2);
  return pow_int(std::sqrt(x), h);
}

/// Gamma(m/2) for integer m >= 1 via the recurrence Gamma(z+1) = z Gamma(z).
inline double gamma_half(int m) {
  double z = 0.5 * m;
  double g = 1.0;
  while (z > 1.25) {
    z -= 1.0;
    g *= z;
  }
  if (z < 0.75) g *= std::sqrt(pi);  // Gamma(1/2); otherwise Gamma(1) = 1
  return g;
}

}  // namespace detail

/// Surface measure of the unit sphere S^{n-1} in R^n: 2 pi^{n/2} / Gamma(n/2).
inline double sphere_measure(int n) {
  if (n < 2) throw std::invalid_argument("sphere_measure: dimension must be >= 2");
  return 2.0 * detail::pow_half(pi, n) / detail::gamma_half(n);
}

/// Lebesgue volume of the spherical shell {r_in < |x| < r_out} in R^n.
inline double annulus_volume(int n, double r_in, double r_out) {
  if (n < 2) throw std::invalid_argument("annulus_volume: dimension must be >= 2");
  if (!(r_in > 0.0) || !(r_out > r_in))
    throw std::invalid_argument("annulus_volume: need 0 < r_in < r_out");
  return sphere_measure(n) * (detail::pow_int(r_out, n) - detail::pow_int(r_in, n)) / n;
}

/// Normalized weights a = alpha/|target shell|, b = (1-alpha)/|domain shell|.
inline std::pair<double, double> weights(double alpha, int n, double r, double R,
                                         double r_star, double R_star) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("weights: alpha must lie in (0,1)");
  const double a = alpha / annulus_volume(n, r_star, R_star);
  const double b = (1.0 - alpha) / annulus_volume(n, r, R);
  return {a, b};
}

/// A full problem instance with derived coefficients.
struct Problem {
  int n = 2;
  double r = 1.0, R = 2.0;
  double r_star = 1.0, R_star = 2.0;
  double alpha = 0.5, beta = 0.5;
  double a = 0.0, b = 0.0;  // normalized weights
  double omega = 0.0;       // surface measure of S^{n-1}
};

inline Problem make_problem(int n, double r, double R, double r_star, double R_star,
                            double alpha) {
  if (n < 2) throw std::invalid_argument("make_problem: dimension must be >= 2");
  if (!(r > 0.0) || !(R > r))
    throw std::invalid_argument("make_problem: need 0 < r < R");
  if (!(r_star > 0.0) || !(R_star > r_star))
    throw std::invalid_argument("make_problem: need 0 < r_star < R_star");
  Problem p;
  p.n = n;
  p.r = r;
  p.R = R;
  p.r_star = r_star;
  p.R_star = R_star;
  p.alpha = alpha;
  p.beta = 1.0 - alpha;
  auto [a, b] = weights(alpha, n, r, R, r_star, R_star);
  p.a = a;
  p.b = b;
  p.omega = sphere_measure(n);
  return p;
}

}  // namespace annulus
