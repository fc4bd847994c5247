#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "annulus/integrate.hpp"

using namespace annulus;

namespace {

OdeSystem decay() {  // y' = -y
  OdeSystem sys;
  sys.dimension = 1;
  sys.rhs = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = -y[0]; };
  return sys;
}

OdeSystem blowup(double cap) {  // y' = y^2, solution 1/(1-x)
  OdeSystem sys;
  sys.dimension = 1;
  sys.rhs = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[0] * y[0];
  };
  sys.guard = [cap](double, std::span<const double> y) { return y[0] < cap; };
  return sys;
}

}  // namespace

TEST(Integrate, LinearDecay) {
  const double y0[1] = {1.0};
  const Trajectory t = integrate(decay(), 0.0, y0, 1.0);
  ASSERT_EQ(t.reason(), StopReason::reached_end);
  EXPECT_NEAR(t.back_state()[0], std::exp(-1.0), 1e-8);
  EXPECT_DOUBLE_EQ(t.back_node(), 1.0);
}

TEST(Integrate, GuardExitOnBlowup) {
  const double y0[1] = {1.0};
  const Trajectory t = integrate(blowup(10.0), 0.0, y0, 2.0);
  ASSERT_EQ(t.reason(), StopReason::guard_exit);
  // solution 1/(1-x) reaches 10 at x = 0.9
  EXPECT_NEAR(t.back_node(), 0.9, 1e-6);
  EXPECT_LT(t.back_state()[0], 10.0);
}

TEST(Integrate, BackwardDirection) {
  OdeSystem sys;
  sys.dimension = 1;
  sys.rhs = [](double, std::span<const double>, std::span<double> dy) { dy[0] = 1.0; };
  const double y0[1] = {5.0};
  const Trajectory t = integrate(sys, 1.0, y0, 0.0);
  ASSERT_EQ(t.reason(), StopReason::reached_end);
  EXPECT_NEAR(t.back_state()[0], 4.0, 1e-12);
}

TEST(Integrate, InvalidStartAndArgs) {
  const double y0[1] = {20.0};
  EXPECT_THROW(integrate(blowup(10.0), 0.0, y0, 1.0), std::invalid_argument);
  const double y1[1] = {1.0};
  EXPECT_THROW(integrate(decay(), 0.0, y1, 0.0), std::invalid_argument);
  IntegrateOptions bad;
  bad.rel_tol = -1;
  EXPECT_THROW(integrate(decay(), 0.0, y1, 1.0, bad), std::invalid_argument);
}

TEST(Integrate, StepUnderflowReported) {
  // rhs with a non-integrable singularity approaching x = 1
  OdeSystem sys;
  sys.dimension = 1;
  sys.rhs = [](double x, std::span<const double>, std::span<double> dy) {
    dy[0] = 1.0 / (1.0 - x);
  };
  const double y0[1] = {0.0};
  const Trajectory t = integrate(sys, 0.0, y0, 1.0);
  EXPECT_TRUE(t.reason() == StopReason::step_underflow ||
              t.reason() == StopReason::step_limit);
}

TEST(Sample, StoredNodesExact) {
  const double y0[1] = {1.0};
  const Trajectory t = integrate(decay(), 0.0, y0, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i)
    EXPECT_DOUBLE_EQ(t.sample(t.node(i))[0], t.state(i)[0]);
}

TEST(Sample, DenseOutputAccuracy) {
  const double y0[1] = {1.0};
  const Trajectory t = integrate(decay(), 0.0, y0, 1.0);
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    EXPECT_NEAR(t.sample(x)[0], std::exp(-x), 1e-7);
  }
  EXPECT_THROW(t.sample(-0.1), std::out_of_range);
  EXPECT_THROW(t.sample(1.1), std::out_of_range);
}

TEST(Sample, MonotoneComponentStaysMonotone) {
  // y' = cos(x)^2 is nonnegative; samples of y must be nondecreasing
  OdeSystem sys;
  sys.dimension = 1;
  sys.rhs = [](double x, std::span<const double>, std::span<double> dy) {
    const double c = std::cos(3 * x);
    dy[0] = c * c;
  };
  const double y0[1] = {0.0};
  IntegrateOptions loose;
  loose.rel_tol = 1e-5;
  loose.abs_tol = 1e-7;
  const Trajectory t = integrate(sys, 0.0, y0, 3.0, loose);
  double prev = -1e300;
  for (int i = 0; i <= 3000; ++i) {
    const double v = t.sample(3.0 * i / 3000.0)[0];
    EXPECT_GE(v, prev - 1e-14);
    prev = v;
  }
}

TEST(Invariants, ToleranceHalvingNeverWorse) {
  const double y0[1] = {1.0};
  double prev_err = 1e300;
  for (double tol = 1e-5; tol > 1e-12; tol *= 0.5) {
    const Trajectory t = integrate(decay(), 0.0, y0, 1.0, tol, tol * 1e-2);
    const double err = std::abs(t.back_state()[0] - std::exp(-1.0));
    EXPECT_LE(err, prev_err * (1.0 + 1e-12)) << "tol=" << tol;
    prev_err = err;
  }
}

TEST(Invariants, ForwardBackwardRoundTrip) {
  OdeSystem sys;
  sys.dimension = 2;
  sys.rhs = [](double x, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -std::sin(y[0]) - 0.1 * y[1] + std::cos(x);
  };
  const double y0[2] = {0.3, -0.2};
  IntegrateOptions opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12;
  const Trajectory fwd = integrate(sys, 0.0, y0, 5.0, opt);
  ASSERT_EQ(fwd.reason(), StopReason::reached_end);
  const Trajectory bwd = integrate(sys, 5.0, fwd.back_state(), 0.0, opt);
  ASSERT_EQ(bwd.reason(), StopReason::reached_end);
  for (int c = 0; c < 2; ++c)
    EXPECT_NEAR(bwd.back_state()[c], y0[c], 10 * (opt.rel_tol + opt.abs_tol) * 100);
}

TEST(Invariants, AllValuesFinite) {
  const double y0[1] = {1.0};
  const Trajectory t = integrate(blowup(1e6), 0.0, y0, 2.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_TRUE(std::isfinite(t.node(i)));
    EXPECT_TRUE(std::isfinite(t.state(i)[0]));
    EXPECT_TRUE(std::isfinite(t.deriv(i)[0]));
  }
}

TEST(Invariants, NodesStrictlyMonotone) {
  const double y0[1] = {1.0};
  for (double x1 : {1.0, -1.0}) {
    const Trajectory t = integrate(decay(), 0.0, y0, x1);
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (x1 > 0) {
        EXPECT_GT(t.node(i), t.node(i - 1));
      } else {
        EXPECT_LT(t.node(i), t.node(i - 1));
      }
    }
  }
}
