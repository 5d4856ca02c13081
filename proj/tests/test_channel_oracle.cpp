#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "hbflow/channel_oracle.hpp"
#include "hbflow/io.hpp"

using namespace hbflow;

namespace {

ChannelProblem problem(FluidParams a, FluidParams b, double f = 1.0, double h1 = 0.5, double h2 = 0.5) {
  ChannelProblem p;
  p.fluid1 = a;
  p.fluid2 = b;
  p.f = f;
  p.h1 = h1;
  p.h2 = h2;
  return p;
}

const FluidParams kBingham{1.0, 0.1, 2.0, 1e-4};

}  // namespace

TEST(ChannelOracle, ZeroForce) {
  const ChannelSolution s(problem(kBingham, kBingham, 0.0));
  EXPECT_EQ(s.interface_stress(), 0.0);
  for (double y = 0; y <= 1.0; y += 0.05) EXPECT_EQ(s.velocity(y), 0.0);
  ASSERT_EQ(s.plug_intervals().size(), 1u);
  EXPECT_EQ(s.plug_intervals()[0].first, 0.0);
  EXPECT_EQ(s.plug_intervals()[0].second, 1.0);
  EXPECT_TRUE(s.rigid());
}

TEST(ChannelOracle, SymmetricNewtonian) {
  // Shear stress (mu/2) u' for the symmetrized-gradient law: u = f y (1 - y) / mu.
  const FluidParams fp{3.0, 0.0, 2.0, 1e-4};
  const ChannelSolution s(problem(fp, fp, 2.0));
  EXPECT_NEAR(s.interface_stress(), 0.0, 1e-14);
  for (double y = 0; y <= 1.0; y += 0.01) EXPECT_NEAR(s.velocity(y), 2.0 * y * (1 - y) / 3.0, 1e-14);
}

TEST(ChannelOracle, TwoLayerNewtonian) {
  // With k_i = mu_i / 2, continuity of u at h1 gives
  //   tau_c (h1/k1 + h2/k2) = f h2^2 / (2 k2) - f h1^2 / (2 k1).
  const double mu1 = 1.0, mu2 = 4.0, f = 1.0, h1 = 0.5, h2 = 0.5;
  const double k1 = mu1 / 2, k2 = mu2 / 2;
  const double tau_c = (f * h2 * h2 / (2 * k2) - f * h1 * h1 / (2 * k1)) / (h1 / k1 + h2 / k2);
  EXPECT_NEAR(tau_c, -0.15, 1e-15);
  const ChannelSolution s(problem({mu1, 0, 2, 1e-4}, {mu2, 0, 2, 1e-4}, f));
  EXPECT_NEAR(s.interface_stress(), -0.15, 1e-13);
  EXPECT_NEAR(s.velocity(0.5), 0.1, 1e-13);
  for (double y = 0; y <= 1.0; y += 0.01) {
    const double exact = y <= h1 ? (tau_c * y - f * (y * y / 2 - h1 * y)) / k1
                                 : -(tau_c * (1 - y) - f * ((1 - y * y) / 2 - h1 * (1 - y))) / k2;
    EXPECT_NEAR(s.velocity(y), exact, 1e-13) << "y = " << y;
  }
}

TEST(ChannelOracle, PowerLawClosedForm) {
  for (const double p : {1.5, 1.7, 2.0}) {
    const FluidParams fp{1.5, 0.0, p, 1e-4};
    const ChannelSolution s(problem(fp, fp, 1.0));
    const double k = fp.mu * std::pow(2.0, -p / 2), q = 1.0 / (p - 1);
    for (double y = 0; y <= 0.5; y += 0.025) {
      const double exact = std::pow(1.0 / k, q) * (std::pow(0.5, q + 1) - std::pow(0.5 - y, q + 1)) / (q + 1);
      EXPECT_NEAR(s.velocity(y), exact, 1e-12 * std::max(1.0, exact)) << "p = " << p << ", y = " << y;
      EXPECT_NEAR(s.velocity(1 - y), s.velocity(y), 1e-12);
    }
  }
}

TEST(ChannelOracle, SymmetricBinghamPlug) {
  const ChannelSolution s(problem(kBingham, kBingham));
  const double half = shear_yield_stress(kBingham);  // a / f with f = 1
  ASSERT_EQ(s.plug_intervals().size(), 1u);
  EXPECT_NEAR(s.plug_intervals()[0].first, 0.5 - half, 1e-14);
  EXPECT_NEAR(s.plug_intervals()[0].second, 0.5 + half, 1e-14);
  // The core moves with the edge of the sheared layer:
  // u(y_c) = int_0^{y_c} (f (1/2 - s) - a) / k ds, k = 1/2, a = g / sqrt 2.
  const double a = shear_yield_stress(kBingham), k = 0.5, yc = 0.5 - half;
  const double umax = (0.5 * yc - yc * yc / 2) / k - a * yc / k;
  EXPECT_NEAR(s.velocity(0.5), umax, 1e-14);
  EXPECT_NEAR(umax, 0.18428932188134524, 1e-15);
}

TEST(ChannelOracle, MatchesCertifiedGoldenProfile) {
  // Frozen from the oracle; certified by an independent finite-difference solve
  // (tools/certify_channel_profile.py: max deviation 1.1e-10).
  std::ifstream in(std::string(HBFLOW_TEST_DATA) + "/bingham_symmetric_profile.csv");
  ASSERT_TRUE(in);
  const CsvTable t = read_csv(in);
  ASSERT_EQ(t.rows.size(), 201u);
  const ChannelSolution s(problem(kBingham, kBingham));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double y = t.real(r, "y");
    EXPECT_NEAR(s.velocity(y), t.real(r, "u"), 1e-13) << "y = " << y;
    EXPECT_NEAR(s.shear_stress(y), t.real(r, "tau"), 1e-13);
    EXPECT_EQ(s.is_plug(y) ? "plug" : "flow", t.rows[r][t.column("phase")]);
  }
}

TEST(YieldThreshold, Examples) {
  const FluidParams newt{1.0, 0.0, 2.0, 1e-4};
  EXPECT_EQ(yield_threshold(problem(newt, newt)), 0.0);
  const double t = yield_threshold(problem(kBingham, kBingham));
  EXPECT_NEAR(t, std::sqrt(2.0) * 0.1, 1e-12);
  FluidParams twice = kBingham;
  twice.g *= 2;
  EXPECT_NEAR(yield_threshold(problem(twice, twice)), 2 * t, 1e-12);
}

TEST(YieldThreshold, MatchesClosedForm) {
  for (const auto& [g1, g2, h1] : {std::tuple{0.05, 0.15, 0.5}, {0.3, 0.01, 0.25}, {0.1, 0.1, 0.75}, {0.0, 0.2, 0.5}}) {
    const ChannelProblem p = problem({1, g1, 1.7, 1e-4}, {3, g2, 2, 1e-4}, 1.0, h1, 1 - h1);
    EXPECT_NEAR(yield_threshold(p), yield_threshold_closed_form(p), 1e-12) << g1 << ' ' << g2 << ' ' << h1;
    // Just below: rigid; just above: flowing.
    ChannelProblem q = p;
    q.f = 0.99 * yield_threshold(p);
    EXPECT_TRUE(ChannelSolution(q).rigid());
    q.f = 1.01 * yield_threshold(p);
    EXPECT_FALSE(ChannelSolution(q).rigid());
  }
}

TEST(ChannelOracle, FlowRateMonotoneInYieldAndForce) {
  for (const double p : {1.6, 2.0}) {
    double prev = HUGE_VAL;
    for (double g = 0.0; g <= 0.4; g += 0.05) {
      const double q = ChannelSolution(problem({1, g, p, 1e-4}, {2, 0.1, 2, 1e-4})).flow_rate();
      EXPECT_LE(q, prev + 1e-15);
      prev = q;
    }
    prev = -HUGE_VAL;
    for (double f = 0.0; f <= 2.0; f += 0.1) {
      const double q = ChannelSolution(problem({1, 0.1, p, 1e-4}, {2, 0.2, 2, 1e-4}, f)).flow_rate();
      EXPECT_GE(q, prev - 1e-15);
      prev = q;
    }
  }
}

TEST(ChannelOracle, ProfileShape) {
  const ChannelProblem prob = problem({1, 0.05, 1.7, 1e-4}, {3, 0.15, 2, 1e-4}, 1.0, 0.4, 0.6);
  const ChannelSolution s(prob);
  const ChannelProfile prof = solve_channel(prob, 401);
  EXPECT_LE(prof.wall_residual, 1e-12);
  std::size_t imax = 0;
  for (std::size_t i = 0; i < prof.u.size(); ++i)
    if (prof.u[i] > prof.u[imax]) imax = i;
  for (std::size_t i = 1; i < prof.u.size(); ++i) {
    if (i <= imax) EXPECT_GE(prof.u[i], prof.u[i - 1] - 1e-15);
    else EXPECT_LE(prof.u[i], prof.u[i - 1] + 1e-15);
    // tau affine with slope -f
    EXPECT_NEAR((prof.tau[i] - prof.tau[i - 1]) / (prof.y[i] - prof.y[i - 1]), -prob.f, 1e-9);
  }
  // Continuity across the interface.
  EXPECT_NEAR(s.velocity(prob.h1 - 1e-12), s.velocity(prob.h1 + 1e-12), 1e-10);
  // Plug intervals are exactly {|tau| <= a_i}.
  for (std::size_t i = 0; i < prof.y.size(); ++i) {
    bool inside = false;
    for (const auto& [a, b] : prof.plug_intervals) inside = inside || (prof.y[i] >= a && prof.y[i] <= b);
    if (std::abs(std::abs(prof.tau[i]) - shear_yield_stress(s.layer(prof.y[i]) == 1 ? prob.fluid1 : prob.fluid2)) > 1e-12)
      EXPECT_EQ(inside, prof.plug[i]) << "y = " << prof.y[i];
  }
}

TEST(ChannelOracle, InputErrors) {
  EXPECT_THROW(ChannelSolution(problem(kBingham, kBingham, -1.0)), InputError);
  EXPECT_THROW(ChannelSolution(problem(kBingham, kBingham, 1.0, 0.0, 1.0)), InputError);
  EXPECT_THROW(solve_channel(problem(kBingham, kBingham), 50), InputError);
}

TEST(ChannelOracle, ProfileCsvRoundTrip) {
  const ChannelProfile prof = solve_channel(problem(kBingham, {2, 0.05, 1.8, 1e-4}), 150);
  std::stringstream ss;
  write_profile_csv(ss, prof);
  const CsvTable t = read_csv(ss);
  ASSERT_EQ(t.header, (std::vector<std::string>{"y", "u", "tau", "phase"}));
  ASSERT_EQ(t.rows.size(), prof.y.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EXPECT_EQ(t.real(r, "y"), prof.y[r]);
    EXPECT_EQ(t.real(r, "u"), prof.u[r]);
    EXPECT_EQ(t.real(r, "tau"), prof.tau[r]);
  }
}
