// Boundary value solver for the radial profile: builds particular solutions
// F_lambda of the reduced flow F' = G(t,F) anchored on the diagonal, shoots
// the profile ODE H' = F over [r,R], and locates lambda* with a bracketed
// secant/bisection on the monotone map lambda -> H_lambda(R).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "annulus/integrate.hpp"
#include "annulus/model.hpp"
#include "annulus/problem.hpp"

namespace annulus {

/// Particular solution F_lambda of the reduced flow, stored as two trajectory
/// pieces meeting at the diagonal anchor (lambda, lambda).
struct FluxCurve {
  double lambda = 0;
  Trajectory down;  // t descending from lambda (may be empty)
  Trajectory up;    // t ascending from lambda (may be empty)

  double t_lo() const { return down.size() ? down.back_node() : lambda; }
  double t_hi() const { return up.size() ? up.back_node() : lambda; }

  /// F_lambda(t) by dense sampling of the stored pieces.
  double value(double t) const {
    if (t == lambda) return lambda;
    if (t < lambda) {
      if (!down.size() || !down.contains(t))
        throw std::out_of_range("FluxCurve::value: t below stored range");
      return down.sample(t)[0];
    }
    if (!up.size() || !up.contains(t))
      throw std::out_of_range("FluxCurve::value: t above stored range");
    return up.sample(t)[0];
  }
};

/// Radial profile H on a grid over [r,R] with slopes K = Hdot.
struct Profile {
  std::vector<double> s;
  std::vector<double> H;
  std::vector<double> K;
  double lambda = 0;
};

enum class ProfileCase { linear, expanding, contracting };

inline const char* to_string(ProfileCase c) {
  switch (c) {
    case ProfileCase::linear: return "linear";
    case ProfileCase::expanding: return "expanding";
    case ProfileCase::contracting: return "contracting";
  }
  return "?";
}

/// Case classification plus the conserved constant c of H - s Hdot =
/// c exp(-int s M).  Expanding (H/s increasing) corresponds to c < 0,
/// contracting to c > 0, linear to c = 0.
struct CaseTag {
  ProfileCase tag = ProfileCase::linear;
  double c = 0.0;
};

struct BvpOptions {
  double shoot_tol = 1e-9;        // relative on |H(R) - R*|
  IntegrateOptions ode{1e-11, 1e-13, 1000000, 1e-14};
  int out_grid = 512;
  bool allow_linear_shortcut = true;
  int max_bracket_doublings = 60;
  int max_shoot_iters = 200;
  double initial_guess_scale = 1.0;  // multiplies the bracket seed
};

namespace detail {

// Trial RK stages may overshoot the admissible region; a NaN slope makes the
// stepper reject and shrink rather than unwinding through an exception.
inline OdeSystem reduced_system(const Problem& pb) {
  OdeSystem sys;
  sys.dimension = 1;
  sys.rhs = [&pb](double t, std::span<const double> y, std::span<double> dy) {
    dy[0] = (t > 0.0 && y[0] > 0.0) ? g_rhs({t, y[0]}, pb)
                                    : std::numeric_limits<double>::quiet_NaN();
  };
  sys.guard = [](double t, std::span<const double> y) { return t > 0.0 && y[0] > 0.0; };
  return sys;
}

inline OdeSystem profile_system(const Problem& pb) {
  OdeSystem sys;
  sys.dimension = 2;  // state = (H, F)
  sys.rhs = [&pb](double s, std::span<const double> y, std::span<double> dy) {
    const double H = y[0], F = y[1];
    if (!(s > 0.0) || !(H > 0.0) || !(F > 0.0)) {
      dy[0] = dy[1] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    dy[0] = F;
    dy[1] = g_rhs({H / s, F}, pb) * (s * F - H) / (s * s);
  };
  sys.guard = [](double, std::span<const double> y) { return y[0] > 0.0 && y[1] > 0.0; };
  return sys;
}

}  // namespace detail

/// Integrate F' = G(t,F) from the diagonal anchor down to t_lo and up to t_hi.
inline FluxCurve solve_reduced(double lambda, double t_lo, double t_hi, const Problem& pb,
                               const IntegrateOptions& opt = BvpOptions{}.ode) {
  if (!(lambda > 0.0) || !(t_lo > 0.0) || !(t_lo <= lambda) || !(lambda <= t_hi))
    throw std::invalid_argument("solve_reduced: need 0 < t_lo <= lambda <= t_hi");
  FluxCurve fc;
  fc.lambda = lambda;
  const OdeSystem sys = detail::reduced_system(pb);
  const double y0[1] = {lambda};
  if (t_lo < lambda) fc.down = integrate(sys, lambda, y0, t_lo, opt);
  if (t_hi > lambda) fc.up = integrate(sys, lambda, y0, t_hi, opt);
  return fc;
}

/// F_lambda(t): integrates only the needed piece of the curve.
inline double q_value(double lambda, double t, const Problem& pb,
                      const IntegrateOptions& opt = BvpOptions{}.ode) {
  if (!(lambda > 0.0) || !(t > 0.0))
    throw std::invalid_argument("q_value: lambda and t must be positive");
  if (t == lambda) return lambda;
  const FluxCurve fc = solve_reduced(lambda, std::min(t, lambda), std::max(t, lambda), pb, opt);
  const Trajectory& piece = (t < lambda) ? fc.down : fc.up;
  if (piece.reason() != StopReason::reached_end)
    throw std::runtime_error(std::string("q_value: reduced flow stopped early (") +
                             to_string(piece.reason()) + ")");
  return fc.value(t);
}

namespace detail {

/// Raw profile shot: trajectory of (H, F) over [r, R] for a given lambda.
inline Trajectory shoot_trajectory(double lambda, const Problem& pb,
                                   const IntegrateOptions& opt) {
  const double k0 = q_value(lambda, pb.r_star / pb.r, pb, opt);
  const OdeSystem sys = profile_system(pb);
  const double y0[2] = {pb.r_star, k0};
  Trajectory traj = integrate(sys, pb.r, y0, pb.R, opt);
  if (traj.reason() != StopReason::reached_end)
    throw std::runtime_error(std::string("profile solve stopped early (") +
                             to_string(traj.reason()) + ")");
  return traj;
}

inline Profile resample(const Trajectory& traj, double lambda, const Problem& pb,
                        int out_grid) {
  Profile prof;
  prof.lambda = lambda;
  const int N = std::max(out_grid, 2);
  prof.s.resize(N);
  prof.H.resize(N);
  prof.K.resize(N);
  for (int i = 0; i < N; ++i) {
    const double s = pb.r + (pb.R - pb.r) * i / (N - 1);
    prof.s[i] = s;
    const std::vector<double> y = traj.sample(i == N - 1 ? traj.back_node() : s);
    prof.H[i] = y[0];
    prof.K[i] = y[1];
  }
  prof.s.front() = pb.r;
  prof.s.back() = pb.R;
  prof.H.front() = pb.r_star;  // exact boundary datum
  return prof;
}

inline Profile linear_profile(const Problem& pb, int out_grid) {
  Profile prof;
  const double c = pb.r_star / pb.r;
  prof.lambda = c;
  const int N = std::max(out_grid, 2);
  prof.s.resize(N);
  prof.H.resize(N);
  prof.K.assign(N, c);
  for (int i = 0; i < N; ++i) {
    prof.s[i] = pb.r + (pb.R - pb.r) * i / (N - 1);
    prof.H[i] = c * prof.s[i];
  }
  prof.s.back() = pb.R;
  prof.H.front() = pb.r_star;
  prof.H.back() = c * pb.R;
  return prof;
}

}  // namespace detail

/// Integrate the coupled (H, F) system for a given lambda and resample.
inline Profile solve_profile(double lambda, const Problem& pb, int out_grid = 512,
                             const IntegrateOptions& opt = BvpOptions{}.ode) {
  return detail::resample(detail::shoot_trajectory(lambda, pb, opt), lambda, pb, out_grid);
}

/// Shooting residual H_lambda(R) - R*.
inline double shoot(double lambda, const Problem& pb,
                    const IntegrateOptions& opt = BvpOptions{}.ode) {
  return detail::shoot_trajectory(lambda, pb, opt).back_state()[0] - pb.R_star;
}

struct ShootingResult {
  double lambda_star = 0;
  Profile profile;
  int shots = 0;         // residual evaluations
  double residual = 0;   // final |H(R) - R*|
};

/// Locate lambda* with bracket expansion plus safeguarded secant/bisection
/// on the strictly increasing residual lambda -> H_lambda(R) - R*.
inline ShootingResult find_lambda(const Problem& pb, const BvpOptions& opt = {}) {
  ShootingResult out;

  // proportional annuli admit the exact linear map
  const double ratio_gap = std::abs(std::log((pb.R * pb.r_star) / (pb.r * pb.R_star)));
  if (opt.allow_linear_shortcut && ratio_gap < 1e-12) {
    out.lambda_star = pb.r_star / pb.r;
    out.profile = detail::linear_profile(pb, opt.out_grid);
    out.residual = 0.0;
    return out;
  }

  const double tol_abs = opt.shoot_tol * pb.R_star;
  Trajectory best;
  double best_lambda = 0, best_res = std::numeric_limits<double>::infinity();
  auto eval = [&](double lam) {
    Trajectory traj = detail::shoot_trajectory(lam, pb, opt.ode);
    ++out.shots;
    const double f = traj.back_state()[0] - pb.R_star;
    if (std::abs(f) < best_res) {
      best_res = std::abs(f);
      best_lambda = lam;
      best = std::move(traj);
    }
    return f;
  };

  double lam0 = opt.initial_guess_scale * std::sqrt((pb.r_star / pb.r) * (pb.R_star / pb.R));
  double f0 = eval(lam0);

  double lo = lam0, hi = lam0, flo = f0, fhi = f0;
  if (std::abs(f0) > tol_abs) {
    if (f0 > 0.0) {  // need smaller lambda
      for (int k = 0; k < opt.max_bracket_doublings && flo > 0.0; ++k) {
        hi = lo;
        fhi = flo;
        lo *= 0.5;
        flo = eval(lo);
      }
      if (flo > 0.0) throw std::runtime_error("find_lambda: bracket expansion failed (low)");
    } else {  // need larger lambda
      for (int k = 0; k < opt.max_bracket_doublings && fhi < 0.0; ++k) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = eval(hi);
      }
      if (fhi < 0.0) throw std::runtime_error("find_lambda: bracket expansion failed (high)");
    }

    for (int it = 0; it < opt.max_shoot_iters && best_res > tol_abs; ++it) {
      const double width = hi - lo;
      if (width < 4e-16 * hi) break;  // bracket exhausted in double precision
      double cand = lo - flo * width / (fhi - flo);  // secant through the bracket
      const double margin = 0.01 * width;
      if (!(cand > lo + margin) || !(cand < hi - margin) || !std::isfinite(cand))
        cand = 0.5 * (lo + hi);
      const double fc = eval(cand);
      if (fc > 0.0) {
        hi = cand;
        fhi = fc;
      } else {
        lo = cand;
        flo = fc;
      }
    }
    if (best_res > tol_abs)
      throw std::runtime_error("find_lambda: shooting did not reach tolerance (best |H(R)-R*| = " +
                               std::to_string(best_res) + ")");
  }

  out.lambda_star = best_lambda;
  out.residual = best_res;
  out.profile = detail::resample(best, best_lambda, pb, opt.out_grid);
  return out;
}

/// Classify a solved profile by the sign structure of H - s Hdot and estimate
/// the conserved constant c (median over the grid, integrating-factor
/// corrected back to s = r).
inline CaseTag classify_case(const Profile& prof, const Problem& pb, double tol = 1e-7) {
  const std::size_t N = prof.s.size();
  if (N < 2) throw std::invalid_argument("classify_case: profile too short");
  std::vector<double> d(N);
  double dmax = 0.0;
  int pos = 0, neg = 0;
  for (std::size_t i = 0; i < N; ++i) {
    d[i] = prof.H[i] - prof.s[i] * prof.K[i];
    dmax = std::max(dmax, std::abs(d[i]));
    if (d[i] > 0) ++pos;
    if (d[i] < 0) ++neg;
  }
  CaseTag tag;
  if (dmax < tol * pb.R_star) {
    tag.tag = ProfileCase::linear;
    tag.c = 0.0;
    return tag;
  }
  if (pos && neg)
    throw std::runtime_error("classify_case: H - s Hdot changes sign on the grid");

  // undo the integrating factor: c = d(s) * exp(+int_r^s tau M dtau)
  std::vector<double> c_est(N);
  double acc = 0.0;
  double prev = prof.s[0] * m_coeff({prof.s[0], prof.H[0], prof.K[0]}, pb);
  c_est[0] = d[0];
  for (std::size_t i = 1; i < N; ++i) {
    const double cur = prof.s[i] * m_coeff({prof.s[i], prof.H[i], prof.K[i]}, pb);
    acc += 0.5 * (prof.s[i] - prof.s[i - 1]) * (prev + cur);
    prev = cur;
    c_est[i] = d[i] * std::exp(acc);
  }
  std::nth_element(c_est.begin(), c_est.begin() + N / 2, c_est.end());
  tag.c = c_est[N / 2];
  tag.tag = (neg ? ProfileCase::expanding : ProfileCase::contracting);
  return tag;
}

/// Reference second-order formulation: integrate (H, K) with K' = (H - s K) M
/// from the same initial data.  Used to cross-check the reduced formulation.
inline Profile solve_profile_via_el(double lambda, const Problem& pb, int out_grid = 512,
                                    const IntegrateOptions& opt = BvpOptions{}.ode) {
  const double k0 = q_value(lambda, pb.r_star / pb.r, pb, opt);
  OdeSystem sys;
  sys.dimension = 2;
  sys.rhs = [&pb](double s, std::span<const double> y, std::span<double> dy) {
    if (!(s > 0.0) || !(y[0] > 0.0) || !(y[1] > 0.0)) {
      dy[0] = dy[1] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    dy[0] = y[1];
    dy[1] = (y[0] - s * y[1]) * m_coeff({s, y[0], y[1]}, pb);
  };
  sys.guard = [](double, std::span<const double> y) { return y[0] > 0.0 && y[1] > 0.0; };
  const double y0[2] = {pb.r_star, k0};
  Trajectory traj = integrate(sys, pb.r, y0, pb.R, opt);
  if (traj.reason() != StopReason::reached_end)
    throw std::runtime_error("solve_profile_via_el: integration stopped early");
  return detail::resample(traj, lambda, pb, out_grid);
}

}  // namespace annulus
