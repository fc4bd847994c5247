// Energy evaluation by composite Gauss-Legendre quadrature, Euler-Lagrange
// residual measurement, random competitor profiles, and a monotone-constrained
// discrete minimizer (coordinate descent) serving as the independent oracle.
//
// All profile energies -- solver output, random trials, oracle iterates --
// go through the same discrete functional: per-cell monotone-limited cubic
// Hermite reconstruction from node values and slopes, 5-point Gauss-Legendre
// per cell.  Slopes are the profile's own K where present and second-order
// finite differences (one-sided at the endpoints, central inside) otherwise,
// so oracle-vs-solver comparisons are on identical functionals.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "annulus/bvp.hpp"
#include "annulus/model.hpp"
#include "annulus/problem.hpp"

namespace annulus {

struct EnergyBreakdown {
  double total = 0, energy = 0, distortion = 0;
};

struct EnergyReport {
  double total = 0;
  double energy_term = 0;
  double distortion_term = 0;
  double el_residual = 0;
  CaseTag case_tag;
  std::optional<double> lambda_star;
};

struct TrialProfile {
  enum class Provenance { random, perturbation, oracle };
  std::vector<double> s, H, K;
  Provenance provenance = Provenance::random;
};

namespace detail {

// 5-point Gauss-Legendre on [0,1]
inline constexpr double gl5_node[5] = {
    0.046910077030668004, 0.230765344947158450, 0.5,
    0.769234655052841550, 0.953089922969331996};
inline constexpr double gl5_weight[5] = {
    0.118463442528094544, 0.239314335249683234, 0.284444444444444444,
    0.239314335249683234, 0.118463442528094544};

/// Integral of the two integrand pieces over one cell (not omega-scaled).
inline void cell_energy(double s0, double s1, double H0, double H1, double K0, double K1,
                        const Problem& pb, double& energy, double& distortion) {
  const double h = s1 - s0;
  double m0 = K0 * h, m1 = K1 * h;
  limit_slopes(H0, H1, m0, m1);
  const double secant = (H1 - H0) / h;
  const double k_floor = 1e-12 * secant;  // guards K^{1-n} on degenerate cells
  double acc_e = 0, acc_d = 0;
  for (int q = 0; q < 5; ++q) {
    const double u = gl5_node[q];
    const double x = s0 + u * h;
    const double Hx = hermite_value(u, H0, H1, m0, m1);
    const double Kx = std::max(hermite_deriv(u, H0, H1, m0, m1) / h, k_floor);
    const EvalPoint p{x, Hx, Kx};
    acc_e += gl5_weight[q] * energy_term(p, pb);
    acc_d += gl5_weight[q] * distortion_term(p, pb);
  }
  energy = acc_e * h;
  distortion = acc_d * h;
}

/// Derivative of the quadratic through (x0,y0),(x1,y1),(x2,y2) at xe.
inline double quad_deriv(double x0, double x1, double x2, double y0, double y1, double y2,
                         double xe) {
  return y0 * (2 * xe - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
         y1 * (2 * xe - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
         y2 * (2 * xe - x0 - x1) / ((x2 - x0) * (x2 - x1));
}

}  // namespace detail

/// Second-order finite-difference slopes: one-sided at the endpoints, central
/// in the interior.
inline std::vector<double> fd_slopes(std::span<const double> s, std::span<const double> H) {
  const std::size_t N = s.size();
  if (N < 3) throw std::invalid_argument("fd_slopes: need at least 3 nodes");
  std::vector<double> K(N);
  K[0] = detail::quad_deriv(s[0], s[1], s[2], H[0], H[1], H[2], s[0]);
  for (std::size_t i = 1; i + 1 < N; ++i)
    K[i] = detail::quad_deriv(s[i - 1], s[i], s[i + 1], H[i - 1], H[i], H[i + 1], s[i]);
  K[N - 1] = detail::quad_deriv(s[N - 3], s[N - 2], s[N - 1], H[N - 3], H[N - 2], H[N - 1],
                                s[N - 1]);
  return K;
}

/// Discrete total energy of a node profile with given slopes (omega-scaled).
inline EnergyBreakdown profile_energy(std::span<const double> s, std::span<const double> H,
                                      std::span<const double> K, const Problem& pb) {
  const std::size_t N = s.size();
  if (N < 2 || H.size() != N || K.size() != N)
    throw std::invalid_argument("profile_energy: inconsistent arrays");
  EnergyBreakdown out;
  for (std::size_t j = 0; j + 1 < N; ++j) {
    double e = 0, d = 0;
    detail::cell_energy(s[j], s[j + 1], H[j], H[j + 1], K[j], K[j + 1], pb, e, d);
    if (!std::isfinite(e) || !std::isfinite(d))
      throw std::runtime_error("profile_energy: non-finite integrand (invalid profile)");
    out.energy += e;
    out.distortion += d;
  }
  out.energy *= pb.omega;
  out.distortion *= pb.omega;
  out.total = out.energy + out.distortion;
  return out;
}

inline EnergyBreakdown profile_energy_fd(std::span<const double> s,
                                         std::span<const double> H, const Problem& pb) {
  return profile_energy(s, H, fd_slopes(s, H), pb);
}

/// Max Euler-Lagrange defect |L_H - d/ds L_K| over interior nodes, relative
/// to the profile-wide scale of the two terms; d/ds by 4th-order central
/// differences (uniform grid).  The defect is normalized globally because
/// L_H and d/ds L_K vanish together at isolated interior points of generic
/// solutions, where a pointwise ratio is 0/0 no matter how accurate the
/// profile is.
inline double el_residual(const Profile& prof, const Problem& pb) {
  const std::size_t N = prof.s.size();
  if (N < 16) throw std::invalid_argument("el_residual: need at least 16 nodes");
  const double h = (prof.s.back() - prof.s.front()) / (N - 1);
  for (std::size_t i = 1; i < N; ++i)
    if (std::abs(prof.s[i] - prof.s[i - 1] - h) > 1e-6 * h)
      throw std::invalid_argument("el_residual: grid must be uniform");

  std::vector<double> LK(N), LH(N);
  for (std::size_t i = 0; i < N; ++i) {
    const EvalPoint p{prof.s[i], prof.H[i], prof.K[i]};
    LK[i] = lagrangian_dK(p, pb);
    LH[i] = lagrangian_dH(p, pb);
  }
  double scale = 0, worst = 0;
  for (std::size_t i = 2; i + 2 < N; ++i) {
    const double dLK = (LK[i - 2] - 8 * LK[i - 1] + 8 * LK[i + 1] - LK[i + 2]) / (12 * h);
    worst = std::max(worst, std::abs(LH[i] - dLK));
    scale = std::max(scale, std::abs(LH[i]) + std::abs(dLK));
  }
  return worst / (scale + 1e-12 * scale + 1e-300);
}

/// Full energy report for a solved (or linear) profile.
inline EnergyReport total_energy(const Profile& prof, const Problem& pb) {
  EnergyReport rep;
  const EnergyBreakdown eb = profile_energy(prof.s, prof.H, prof.K, pb);
  rep.total = eb.total;
  rep.energy_term = eb.energy;
  rep.distortion_term = eb.distortion;
  rep.el_residual = el_residual(prof, pb);
  rep.case_tag = classify_case(prof, pb);
  if (prof.lambda > 0) rep.lambda_star = prof.lambda;
  return rep;
}

inline EnergyBreakdown trial_energy(const TrialProfile& t, const Problem& pb) {
  return profile_energy(t.s, t.H, t.K, pb);
}

/// Deterministic competitor profiles on the solution's grid: random monotone
/// cumulative sums, power-law reparametrizations, and small perturbations of
/// the solution.  Endpoints are exact; node slopes are fd_slopes floored to a
/// small positive value.
inline std::vector<TrialProfile> random_trials(const Problem& pb, const Profile& solution,
                                               int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("random_trials: count must be >= 1");
  const std::size_t N = solution.s.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double span_star = pb.R_star - pb.r_star;

  std::vector<TrialProfile> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    TrialProfile t;
    t.s = solution.s;
    t.H.assign(N, 0.0);
    const int family = k % 3;
    if (family == 0) {  // random monotone cumulative sum
      std::vector<double> inc(N - 1);
      for (auto& v : inc) v = std::exp(0.8 * gauss(rng));
      const int smooth_passes = (k / 3) % 3;
      for (int p = 0; p < smooth_passes; ++p) {
        std::vector<double> sm(inc);
        for (std::size_t i = 1; i + 1 < inc.size(); ++i)
          sm[i] = (inc[i - 1] + inc[i] + inc[i + 1]) / 3.0;
        inc.swap(sm);
      }
      double total = 0;
      for (double v : inc) total += v;
      double acc = 0;
      t.H[0] = pb.r_star;
      for (std::size_t i = 1; i < N; ++i) {
        acc += inc[i - 1];
        t.H[i] = pb.r_star + span_star * acc / total;
      }
      t.H[N - 1] = pb.R_star;
      t.provenance = TrialProfile::Provenance::random;
    } else if (family == 1) {  // power law
      const double p = std::exp(std::log(0.3) + unif(rng) * (std::log(3.0) - std::log(0.3)));
      for (std::size_t i = 0; i < N; ++i) {
        const double x = (t.s[i] - pb.r) / (pb.R - pb.r);
        t.H[i] = pb.r_star + span_star * std::pow(x, p);
      }
      t.H[0] = pb.r_star;
      t.H[N - 1] = pb.R_star;
      t.provenance = TrialProfile::Provenance::random;
    } else {  // perturbation of the solution
      const int mode = 1 + k % 4;
      double amp = span_star *
                   std::exp(std::log(1e-3) + unif(rng) * (std::log(5e-2) - std::log(1e-3)));
      for (int attempt = 0; attempt < 60; ++attempt) {
        bool monotone = true;
        for (std::size_t i = 0; i < N; ++i) {
          const double x = (t.s[i] - pb.r) / (pb.R - pb.r);
          t.H[i] = solution.H[i] + amp * std::sin(mode * pi * x);
        }
        t.H[0] = pb.r_star;
        t.H[N - 1] = pb.R_star;
        for (std::size_t i = 1; i < N; ++i)
          if (!(t.H[i] > t.H[i - 1])) {
            monotone = false;
            break;
          }
        if (monotone) break;
        amp *= 0.5;
      }
      t.provenance = TrialProfile::Provenance::perturbation;
    }
    t.K = fd_slopes(t.s, t.H);
    const double floor = 1e-6 * span_star / (pb.R - pb.r);
    for (auto& v : t.K) v = std::max(v, floor);
    out.push_back(std::move(t));
  }
  return out;
}

struct OracleResult {
  TrialProfile profile;
  double energy = 0;
  bool converged = false;
  int sweeps = 0;
  std::vector<double> sweep_energies;  // total after each sweep (non-increasing)
};

namespace detail {

/// One ladder level of the discrete minimizer.
class OracleLevel {
 public:
  OracleLevel(const Problem& pb, std::vector<double> s, std::vector<double> H)
      : pb_(pb), s_(std::move(s)), H_(std::move(H)) {
    N_ = s_.size();
    K_ = fd_slopes(s_, H_);
    cell_.assign(N_ - 1, 0.0);
    for (std::size_t j = 0; j + 1 < N_; ++j) cell_[j] = cell_value(j);
    total_ = 0;
    for (double v : cell_) total_ += v;
    gap_ = 1e-6 * (pb.R_star - pb.r_star) / static_cast<double>(N_);
    xtol_ = 1e-9 * (pb.R_star - pb.r_star);
  }

  double total() const { return total_; }
  const std::vector<double>& s() const { return s_; }
  const std::vector<double>& H() const { return H_; }

  /// One cyclic coordinate-descent sweep; returns the energy decrease.
  double sweep() {
    const double before = total_;
    for (std::size_t i = 1; i + 1 < N_; ++i) relax_node(i);
    return before - total_;
  }

 private:
  double cell_value(std::size_t j) const {
    double e = 0, d = 0;
    cell_energy(s_[j], s_[j + 1], H_[j], H_[j + 1], K_[j], K_[j + 1], pb_, e, d);
    return e + d;
  }

  void refresh_slope(std::size_t j) {
    if (j == 0) {
      K_[0] = quad_deriv(s_[0], s_[1], s_[2], H_[0], H_[1], H_[2], s_[0]);
    } else if (j == N_ - 1) {
      K_[j] = quad_deriv(s_[N_ - 3], s_[N_ - 2], s_[N_ - 1], H_[N_ - 3], H_[N_ - 2],
                         H_[N_ - 1], s_[N_ - 1]);
    } else {
      K_[j] = quad_deriv(s_[j - 1], s_[j], s_[j + 1], H_[j - 1], H_[j], H_[j + 1], s_[j]);
    }
  }

  void touched_slopes(std::size_t i, std::size_t idx[4], int& cnt) const {
    cnt = 0;
    if (i <= 2) idx[cnt++] = 0;
    if (i >= 2) idx[cnt++] = i - 1;
    if (i + 1 <= N_ - 2) idx[cnt++] = i + 1;
    if (i + 3 >= N_) idx[cnt++] = N_ - 1;
  }

  void cell_range(std::size_t i, std::size_t& lo, std::size_t& hi) const {
    lo = (i >= 2) ? i - 2 : 0;         // covers cell 0 whenever K_0 is touched
    hi = std::min(N_ - 2, i + 1);      // covers cell N-2 whenever K_{N-1} is
  }

  void relax_node(std::size_t i) {
    const double a = H_[i - 1] + gap_;
    const double b = H_[i + 1] - gap_;
    if (!(b > a)) return;

    std::size_t lo, hi;
    cell_range(i, lo, hi);
    std::size_t kidx[4];
    int kcnt = 0;
    touched_slopes(i, kidx, kcnt);
    double ksave[4];
    for (int k = 0; k < kcnt; ++k) ksave[k] = K_[kidx[k]];
    const double hsave = H_[i];

    auto local = [&](double cand) {
      H_[i] = cand;
      for (int k = 0; k < kcnt; ++k) refresh_slope(kidx[k]);
      double sum = 0;
      for (std::size_t j = lo; j <= hi; ++j) sum += cell_value(j);
      return sum;
    };
    auto restore = [&] {
      H_[i] = hsave;
      for (int k = 0; k < kcnt; ++k) K_[kidx[k]] = ksave[k];
    };

    double base = 0;
    for (std::size_t j = lo; j <= hi; ++j) base += cell_[j];

    // golden-section search on [a,b]
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = local(x1), f2 = local(x2);
    double lo_x = a, hi_x = b;
    while (hi_x - lo_x > xtol_) {
      if (f1 <= f2) {
        hi_x = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi_x - inv_phi * (hi_x - lo_x);
        f1 = local(x1);
      } else {
        lo_x = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo_x + inv_phi * (hi_x - lo_x);
        f2 = local(x2);
      }
    }
    const double cand = (f1 <= f2) ? x1 : x2;
    const double fc = std::min(f1, f2);
    if (fc < base) {
      const double val = local(cand);  // commit
      for (std::size_t j = lo; j <= hi; ++j) cell_[j] = cell_value(j);
      total_ += val - base;
    } else {
      restore();
    }
  }

  const Problem& pb_;
  std::vector<double> s_, H_, K_;
  std::vector<double> cell_;
  double total_ = 0;
  double gap_ = 0, xtol_ = 0;
  std::size_t N_ = 0;
};

}  // namespace detail

/// Monotone-constrained discrete minimizer of the quadrature energy over
/// interior node values, by cyclic coordinate descent with golden-section
/// line searches.  Runs coarse-to-fine: the coarsest level starts from the
/// linear profile and each level seeds the next by linear interpolation,
/// which removes the smooth error modes plain sweeps stall on.
inline OracleResult discrete_minimize(const Problem& pb, int grid_size, int max_iters = 400) {
  if (grid_size < 32) throw std::invalid_argument("discrete_minimize: grid_size must be >= 32");
  std::vector<int> ladder{grid_size};
  while (ladder.back() > 12) ladder.push_back((ladder.back() + 1) / 2);
  std::reverse(ladder.begin(), ladder.end());

  auto uniform_grid = [&](int N) {
    std::vector<double> s(N);
    for (int i = 0; i < N; ++i) s[i] = pb.r + (pb.R - pb.r) * i / (N - 1.0);
    s.back() = pb.R;
    return s;
  };

  // linear initialization at the coarsest level
  std::vector<double> s = uniform_grid(ladder.front());
  std::vector<double> H(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    H[i] = pb.r_star + (pb.R_star - pb.r_star) * (s[i] - pb.r) / (pb.R - pb.r);

  OracleResult res;
  for (std::size_t lev = 0; lev < ladder.size(); ++lev) {
    if (lev > 0) {  // prolong by linear interpolation
      std::vector<double> sf = uniform_grid(ladder[lev]);
      std::vector<double> Hf(sf.size());
      std::size_t j = 0;
      for (std::size_t i = 0; i < sf.size(); ++i) {
        while (j + 2 < s.size() && s[j + 1] < sf[i]) ++j;
        const double u = (sf[i] - s[j]) / (s[j + 1] - s[j]);
        Hf[i] = (1 - u) * H[j] + u * H[j + 1];
      }
      Hf.front() = pb.r_star;
      Hf.back() = pb.R_star;
      s.swap(sf);
      H.swap(Hf);
    }

    detail::OracleLevel level(pb, s, H);
    const bool final_level = (lev + 1 == ladder.size());
    bool tol_hit = false;
    for (int it = 0; it < max_iters; ++it) {
      const double dec = level.sweep();
      ++res.sweeps;
      if (final_level) res.sweep_energies.push_back(pb.omega * level.total());
      if (dec < 1e-12 * std::abs(level.total())) {
        tol_hit = true;
        break;
      }
    }
    H = level.H();
    if (final_level) {
      res.converged = tol_hit;
      res.energy = pb.omega * level.total();
    }
  }

  res.profile.s = std::move(s);
  res.profile.H = std::move(H);
  res.profile.K = fd_slopes(res.profile.s, res.profile.H);
  res.profile.provenance = TrialProfile::Provenance::oracle;
  return res;
}

}  // namespace annulus
