// Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)) with PI
// step-size control, monotone cubic-Hermite dense output, and domain-guard
// exit detection.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace annulus {

enum class StopReason { reached_end, guard_exit, step_underflow, step_limit };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::reached_end: return "reached_end";
    case StopReason::guard_exit: return "guard_exit";
    case StopReason::step_underflow: return "step_underflow";
    case StopReason::step_limit: return "step_limit";
  }
  return "?";
}

/// First-order system y' = rhs(x, y) on the open region where guard holds.
struct OdeSystem {
  int dimension = 1;
  std::function<void(double, std::span<const double>, std::span<double>)> rhs;
  std::function<bool(double, std::span<const double>)> guard;  // empty = everywhere admissible

  bool admissible(double x, std::span<const double> y) const {
    return !guard || guard(x, y);
  }
};

struct IntegrateOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  long max_steps = 1000000;
  double min_step_rel = 1e-14;  // relative to |x1 - x0|
};

namespace detail {

/// Cubic Hermite basis on [0,1]; slopes are per unit of the cell width.
inline double hermite_value(double u, double y0, double y1, double m0, double m1) {
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * y1 +
         (u3 - u2) * m1;
}

inline double hermite_deriv(double u, double y0, double y1, double m0, double m1) {
  const double u2 = u * u;
  return (6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * y1 +
         (3 * u2 - 2 * u) * m1;
}

/// Fritsch-Carlson slope limiting: returns cell slopes (per unit width) that
/// keep the Hermite cubic monotone when the data is.  A no-op on resolved
/// smooth data.
inline void limit_slopes(double y0, double y1, double& m0, double& m1) {
  const double d = y1 - y0;
  if (d == 0.0) {
    m0 = m1 = 0.0;
    return;
  }
  double alpha = m0 / d, beta = m1 / d;
  if (alpha < 0.0) {
    m0 = 0.0;
    alpha = 0.0;
  }
  if (beta < 0.0) {
    m1 = 0.0;
    beta = 0.0;
  }
  const double r2 = alpha * alpha + beta * beta;
  if (r2 > 9.0) {
    const double tau = 3.0 / std::sqrt(r2);
    m0 = tau * alpha * d;
    m1 = tau * beta * d;
  }
}

}  // namespace detail

/// Sampled solution curve: nodes (strictly monotone in the integration
/// direction), per-node states and derivatives, and why integration stopped.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(int dim, StopReason reason) : dim_(dim), reason_(reason) {}

  int dimension() const { return dim_; }
  std::size_t size() const { return nodes_.size(); }
  double node(std::size_t i) const { return nodes_[i]; }
  std::span<const double> state(std::size_t i) const {
    return {states_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const double> deriv(std::size_t i) const {
    return {derivs_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  double front_node() const { return nodes_.front(); }
  double back_node() const { return nodes_.back(); }
  std::span<const double> back_state() const { return state(size() - 1); }
  StopReason reason() const { return reason_; }
  void set_reason(StopReason r) { reason_ = r; }

  void push(double x, std::span<const double> y, std::span<const double> f) {
    nodes_.push_back(x);
    states_.insert(states_.end(), y.begin(), y.end());
    derivs_.insert(derivs_.end(), f.begin(), f.end());
  }

  bool contains(double x) const {
    const double lo = std::min(nodes_.front(), nodes_.back());
    const double hi = std::max(nodes_.front(), nodes_.back());
    const double slack = 1e-12 * (hi - lo) + 1e-300;
    return x >= lo - slack && x <= hi + slack;
  }

  /// Dense output at x via monotone piecewise-cubic interpolation.
  std::vector<double> sample(double x) const {
    if (nodes_.empty()) throw std::out_of_range("Trajectory::sample: empty trajectory");
    if (!contains(x)) throw std::out_of_range("Trajectory::sample: x outside node range");
    if (nodes_.size() == 1) return {states_.begin(), states_.end()};
    const std::size_t i = locate(x);
    std::vector<double> out(dim_);
    interp_cell(i, x, out, nullptr);
    return out;
  }

  /// Dense output of state and state-derivative at x.
  void sample_with_deriv(double x, std::span<double> y, std::span<double> dy) const {
    if (!contains(x)) throw std::out_of_range("Trajectory::sample: x outside node range");
    std::vector<double> tmp(dim_);
    interp_cell(locate(x), x, tmp, &dy);
    std::copy(tmp.begin(), tmp.end(), y.begin());
  }

 private:
  std::size_t locate(double x) const {
    const bool inc = nodes_.back() >= nodes_.front();
    std::size_t lo = 0, hi = nodes_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const bool left = inc ? (x >= nodes_[mid]) : (x <= nodes_[mid]);
      (left ? lo : hi) = mid;
    }
    return lo;
  }

  void interp_cell(std::size_t i, double x, std::vector<double>& y,
                   std::span<double>* dy) const {
    const double x0 = nodes_[i], x1 = nodes_[i + 1];
    const double h = x1 - x0;
    if (h == 0.0) {
      std::copy(states_.begin() + i * dim_, states_.begin() + (i + 1) * dim_, y.begin());
      return;
    }
    const double u = (x - x0) / h;
    for (int c = 0; c < dim_; ++c) {
      const double y0 = states_[i * dim_ + c], y1 = states_[(i + 1) * dim_ + c];
      double m0 = derivs_[i * dim_ + c] * h, m1 = derivs_[(i + 1) * dim_ + c] * h;
      detail::limit_slopes(y0, y1, m0, m1);
      if (x == x0) {
        y[c] = y0;
      } else if (x == x1) {
        y[c] = y1;
      } else {
        y[c] = detail::hermite_value(u, y0, y1, m0, m1);
      }
      if (dy) (*dy)[c] = detail::hermite_deriv(u, y0, y1, m0, m1) / h;
    }
  }

  int dim_ = 0;
  std::vector<double> nodes_;
  std::vector<double> states_;  // size() * dim_
  std::vector<double> derivs_;  // size() * dim_
  StopReason reason_ = StopReason::reached_end;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace detail

/// Integrate system from (x0, state0) toward x1 (either direction).  Stops at
/// x1, at guard exit (localized within abs_tol), on step underflow, or on the
/// step budget.
inline Trajectory integrate(const OdeSystem& sys, double x0, std::span<const double> state0,
                            double x1, const IntegrateOptions& opt = {}) {
  using T = detail::Dopri5;
  const int dim = sys.dimension;
  if (static_cast<int>(state0.size()) != dim)
    throw std::invalid_argument("integrate: state size does not match system dimension");
  if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0))
    throw std::invalid_argument("integrate: tolerances must be positive");
  if (x1 == x0) throw std::invalid_argument("integrate: x1 must differ from x0");
  if (!sys.admissible(x0, state0))
    throw std::invalid_argument("integrate: guard false at initial point");

  const double dir = (x1 > x0) ? 1.0 : -1.0;
  const double span_len = std::abs(x1 - x0);
  const double min_step = opt.min_step_rel * span_len;

  std::vector<double> y(state0.begin(), state0.end());
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  std::vector<double> ytmp(dim), ynew(dim);

  Trajectory traj(dim, StopReason::reached_end);
  double x = x0;
  sys.rhs(x, y, k1);
  if (!detail::all_finite(k1))
    throw std::invalid_argument("integrate: rhs not finite at initial point");
  traj.push(x, y, k1);

  // initial step size: standard two-stage heuristic
  double h;
  {
    double d0 = 0, d1 = 0;
    for (int c = 0; c < dim; ++c) {
      const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[c]);
      d0 += (y[c] / sc) * (y[c] / sc);
      d1 += (k1[c] / sc) * (k1[c] / sc);
    }
    d0 = std::sqrt(d0 / dim);
    d1 = std::sqrt(d1 / dim);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span_len : 0.01 * d0 / d1;
    h0 = std::min(h0, span_len);
    for (int c = 0; c < dim; ++c) ytmp[c] = y[c] + dir * h0 * k1[c];
    double d2 = 0;
    if (sys.admissible(x + dir * h0, ytmp)) {
      sys.rhs(x + dir * h0, ytmp, k2);
      if (detail::all_finite(k2)) {
        for (int c = 0; c < dim; ++c) {
          const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[c]);
          d2 += ((k2[c] - k1[c]) / sc) * ((k2[c] - k1[c]) / sc);
        }
        d2 = std::sqrt(d2 / dim) / h0;
      }
    }
    const double dm = std::max(d1, d2);
    const double h1 = (dm <= 1e-15) ? std::max(1e-6 * span_len, h0 * 1e-3)
                                    : std::pow(0.01 / dm, 0.2);
    h = std::min({100 * h0, h1, span_len});
  }

  double err_old = 1e-4;
  bool rejected_last = false;

  for (long step = 0; step < opt.max_steps; ++step) {
    if (std::abs(x - x1) <= 1e-14 * span_len) {
      traj.set_reason(StopReason::reached_end);
      return traj;
    }
    h = std::min(h, std::abs(x1 - x));
    if (h < min_step) {
      traj.set_reason(StopReason::step_underflow);
      return traj;
    }
    const double hs = dir * h;

    bool bad = false;
    auto stage = [&](std::vector<double>& k, double cfrac, auto combine) {
      if (bad) return;
      for (int c = 0; c < dim; ++c) ytmp[c] = y[c] + hs * combine(c);
      sys.rhs(x + cfrac * hs, ytmp, k);
      if (!detail::all_finite(ytmp) || !detail::all_finite(k)) bad = true;
    };
    stage(k2, T::c2, [&](int c) { return T::a21 * k1[c]; });
    stage(k3, T::c3, [&](int c) { return T::a31 * k1[c] + T::a32 * k2[c]; });
    stage(k4, T::c4, [&](int c) { return T::a41 * k1[c] + T::a42 * k2[c] + T::a43 * k3[c]; });
    stage(k5, T::c5, [&](int c) {
      return T::a51 * k1[c] + T::a52 * k2[c] + T::a53 * k3[c] + T::a54 * k4[c];
    });
    stage(k6, 1.0, [&](int c) {
      return T::a61 * k1[c] + T::a62 * k2[c] + T::a63 * k3[c] + T::a64 * k4[c] +
             T::a65 * k5[c];
    });
    double err = 0.0;
    if (!bad) {
      for (int c = 0; c < dim; ++c) {
        ynew[c] = y[c] + hs * (T::b1 * k1[c] + T::b3 * k3[c] + T::b4 * k4[c] + T::b5 * k5[c] +
                               T::b6 * k6[c]);
      }
      sys.rhs(x + hs, ynew, k7);
      bad = !detail::all_finite(ynew) || !detail::all_finite(k7);
      if (!bad) {
        for (int c = 0; c < dim; ++c) {
          const double e = hs * (T::e1 * k1[c] + T::e3 * k3[c] + T::e4 * k4[c] +
                                 T::e5 * k5[c] + T::e6 * k6[c] + T::e7 * k7[c]);
          const double sc =
              opt.abs_tol + opt.rel_tol * std::max(std::abs(y[c]), std::abs(ynew[c]));
          err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / dim);
      }
    }

    if (bad || err > 1.0) {  // reject
      const double fac =
          bad ? 0.5 : std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
      h *= std::min(fac, 0.9);
      rejected_last = true;
      continue;
    }

    // accept
    const double xn = x + hs;
    if (!sys.admissible(xn, ynew)) {
      // localize the exit by bisection on the Hermite interpolant of this step
      double ulo = 0.0, uhi = 1.0;
      std::vector<double> ymid(dim), m0(dim), m1(dim);
      for (int c = 0; c < dim; ++c) {
        m0[c] = k1[c] * hs;
        m1[c] = k7[c] * hs;
      }
      for (int it = 0; it < 80 && (uhi - ulo) * h > opt.abs_tol; ++it) {
        const double um = 0.5 * (ulo + uhi);
        for (int c = 0; c < dim; ++c)
          ymid[c] = detail::hermite_value(um, y[c], ynew[c], m0[c], m1[c]);
        if (sys.admissible(x + um * hs, ymid)) {
          ulo = um;
        } else {
          uhi = um;
        }
      }
      for (int c = 0; c < dim; ++c)
        ymid[c] = detail::hermite_value(ulo, y[c], ynew[c], m0[c], m1[c]);
      sys.rhs(x + ulo * hs, ymid, k2);
      if (ulo > 0.0 && detail::all_finite(k2)) traj.push(x + ulo * hs, ymid, k2);
      traj.set_reason(StopReason::guard_exit);
      return traj;
    }

    x = xn;
    y = ynew;
    traj.push(x, y, k7);
    std::swap(k1, k7);  // FSAL

    double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.17) * std::pow(err_old, 0.04);
    fac = std::clamp(fac, 0.2, rejected_last ? 1.0 : 10.0);
    h *= fac;
    err_old = std::max(err, 1e-4);
    rejected_last = false;
  }
  traj.set_reason(StopReason::step_limit);
  return traj;
}

inline Trajectory integrate(const OdeSystem& sys, double x0, std::span<const double> state0,
                            double x1, double rel_tol, double abs_tol) {
  IntegrateOptions opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = abs_tol;
  return integrate(sys, x0, state0, x1, opt);
}

}  // namespace annulus
