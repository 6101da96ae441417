#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace horizon;
using horizon::testing::random_signal;

TEST(Signal, RejectsMalformedBreakpoints) {
  EXPECT_THROW(ControlSignal({0.0, 0.5, 0.5, 1.0}, Mat::Zero(3, 1)), InvalidArgument);
  EXPECT_THROW(ControlSignal({0.0, 0.7, 0.5}, Mat::Zero(2, 1)), InvalidArgument);
  EXPECT_THROW(ControlSignal({0.1, 1.0}, Mat::Zero(1, 1)), InvalidArgument);
  EXPECT_THROW(ControlSignal({0.0, 1.0}, Mat::Zero(2, 1)), InvalidArgument);
  Mat bad(1, 1);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(ControlSignal({0.0, 1.0}, bad), InvalidArgument);
}

TEST(Energy, Examples) {
  EXPECT_EQ(energy(ControlSignal::zero(2), 2.0), 0.0);
  EXPECT_DOUBLE_EQ(energy(ControlSignal::constant(Vec{{1.0, 0.0}}), 2.0), 1.0);
  EXPECT_DOUBLE_EQ(energy(ControlSignal::constant(Vec{{2.0, -1.0}}, 0.5), 3.0), 4.5);
}

TEST(Energy, ClosedFormSegmentSum) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_signal(rng, 3, 7, 2.0);
    for (double p : {1.5, 2.0, 3.7}) {
      double expected = 0.0;
      for (int k = 0; k < u.segments(); ++k)
        for (int i = 0; i < 3; ++i) expected += u.length(k) * std::pow(std::abs(u.values()(k, i)), p);
      EXPECT_NEAR(energy(u, p), expected, 1e-12 * expected);
      EXPECT_NEAR(lp_norm(u, p), std::pow(expected, 1.0 / p), 1e-12);
    }
  }
}

TEST(Energy, VectorNormVariantCoincidesAtTwo) {
  std::mt19937_64 rng(2);
  const auto u = random_signal(rng, 2, 9);
  EXPECT_NEAR(energy(u, 2.0, EnergyNorm::vector), energy(u, 2.0), 1e-14);
  EXPECT_NE(energy(u, 3.0, EnergyNorm::vector), energy(u, 3.0));
}

TEST(EnergyGradient, Examples) {
  std::mt19937_64 rng(3);
  const auto u = random_signal(rng, 2, 5);
  const auto g = energy_gradient(u, 2.0);
  EXPECT_TRUE(g.values().isApprox(2.0 * u.values()));
  EXPECT_EQ(g.breakpoints(), u.breakpoints());

  const auto g3 = energy_gradient(ControlSignal::constant(Vec{{-2.0}}), 3.0);
  EXPECT_DOUBLE_EQ(g3.values()(0, 0), -12.0);

  // p < 2: 0 maps to 0 by continuity
  const auto g15 = energy_gradient(ControlSignal::constant(Vec{{0.0, 1.0}}), 1.5);
  EXPECT_EQ(g15.values()(0, 0), 0.0);
}

TEST(EnergyGradient, MatchesDirectionalFiniteDifferences) {
  std::mt19937_64 rng(4);
  const double eps = 1e-5;
  for (auto norm : {EnergyNorm::componentwise, EnergyNorm::vector}) {
    for (double p : {1.5, 2.0, 3.0, 4.5}) {
      for (int trial = 0; trial < 10; ++trial) {
        const auto u = random_signal(rng, 2, 6, 1.5);
        const auto h = u.with_values(random_signal(rng, 2, 6).values());
        const double fd = (energy(u.with_values(u.values() + eps * h.values()), p, norm) - energy(u, p, norm)) / eps;
        const double exact = pairing(energy_gradient(u, p, norm), h);
        EXPECT_LE(std::abs(fd - exact), 1e-4 * std::max(1.0, std::abs(exact))) << p;
      }
    }
  }
}

TEST(DualMap, Examples) {
  EXPECT_EQ(dual_map(ControlSignal::zero(1), 3.0).values()(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(dual_map(ControlSignal::constant(Vec{{-4.0}}), 3.0).values()(0, 0), -2.0);
}

TEST(DualMap, InvertsTheGradient) {
  std::mt19937_64 rng(5);
  for (auto norm : {EnergyNorm::componentwise, EnergyNorm::vector}) {
    for (int trial = 0; trial < 50; ++trial) {
      const double p = 1.2 + 0.1 * trial;
      const auto u = random_signal(rng, 3, 8, 3.0);
      const auto back = dual_map(energy_gradient(u, p, norm) * (1.0 / p), p, norm);
      EXPECT_LE((back.values() - u.values()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, u.values().cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Rho, Examples) {
  const EnergyParams params(2.0, 1.0);
  const std::vector<double> zero_r{0.5, 0.0};
  const auto z = rho(zero_r, 2, params);
  EXPECT_EQ(z.segments(), 0);
  EXPECT_EQ(lp_norm(z, 2.0), 0.0);

  const std::vector<double> r{0.0, 4.0};
  const auto s = rho(r, 2, params);
  ASSERT_EQ(s.segments(), 1);
  EXPECT_DOUBLE_EQ(s.start(0), 0.0);
  EXPECT_DOUBLE_EQ(s.end(0), 4.0);
  EXPECT_DOUBLE_EQ(s.values()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(lp_norm(s, 2.0), 2.0);
}

TEST(Rho, OffsetByPreviousCoordinate) {
  const std::vector<double> r{-2.0, 3.0};
  const auto s = rho(r, 2, EnergyParams(3.0, 0.5));
  ASSERT_EQ(s.segments(), 2);
  EXPECT_DOUBLE_EQ(s.end(0), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(s.length(1), std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(s.values()(1, 0), 3.0 / std::sqrt(3.0));
}

TEST(Rho, NormLaw) {
  for (auto [p, beta] : {std::pair{2.0, 1.0}, {3.0, 1.0}, {1.5, 2.0}, {4.0, 0.3}}) {
    const EnergyParams params(p, beta);
    const double expected = (beta + p - beta * p) / p;
    for (double r : {1e-3, 1e-2, 0.1, 0.5, 1.0}) {
      const std::vector<double> rv{0.0, -r};
      EXPECT_NEAR(lp_norm(rho(rv, 2, params), p), std::pow(r, expected), 1e-13);
    }
    const std::vector<double> lo{1e-3}, hi{1.0};
    const double slope = (std::log(lp_norm(rho(hi, 1, params), p)) - std::log(lp_norm(rho(lo, 1, params), p))) /
                         (std::log(1.0) - std::log(1e-3));
    EXPECT_NEAR(slope, expected, 1e-6);
  }
}

TEST(EnergyParams, Admissibility) {
  EXPECT_THROW(EnergyParams(1.0), InvalidArgument);
  EXPECT_THROW(EnergyParams(2.0, 2.0), InvalidArgument);
  EXPECT_THROW(EnergyParams(3.0, 0.0), InvalidArgument);
  EXPECT_NO_THROW(EnergyParams(3.0, 1.49));
  EXPECT_DOUBLE_EQ(EnergyParams(3.0).q(), 1.5);
}

TEST(ConcatenateRescaled, ZeroHorizonIsIdentity) {
  std::mt19937_64 rng(6);
  const auto u = random_signal(rng, 2, 5);
  const auto v = random_signal(rng, 2, 3, 1.0, 2.0);
  EXPECT_EQ(concatenate_rescaled(u, v, 0.0), u);
  EXPECT_EQ(concatenate_rescaled(u, ControlSignal(2), 0.0), u);
}

TEST(ConcatenateRescaled, ConstantExample) {
  const auto one = ControlSignal::constant(Vec{{1.0}});
  const auto c = concatenate_rescaled(one, one, 1.0);
  for (int k = 0; k < c.segments(); ++k) EXPECT_DOUBLE_EQ(c.values()(k, 0), 2.0);
  EXPECT_DOUBLE_EQ(c.horizon(), 1.0);
  EXPECT_DOUBLE_EQ(c.breakpoints()[1], 0.5);
}

TEST(ConcatenateRescaled, Errors) {
  const auto u = ControlSignal::constant(Vec{{1.0}});
  EXPECT_THROW(concatenate_rescaled(u, u, -0.1), InvalidArgument);
  EXPECT_THROW(concatenate_rescaled(u, u, 2.0), InvalidArgument);  // v too short
  EXPECT_THROW(concatenate_rescaled(ControlSignal::constant(Vec{{1.0}}, 2.0), u, 0.5), InvalidArgument);
}

TEST(ConcatenateRescaled, NormIdentityAndBreakpointBound) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double T = 3.0 * unit(rng);
    const auto u = random_signal(rng, 2, 1 + trial % 7, 2.0);
    const auto v = random_signal(rng, 2, 1 + trial % 5, 2.0, T + unit(rng));
    const auto c = concatenate_rescaled(u, v, T);
    EXPECT_LE(c.breakpoints().size(), static_cast<std::size_t>(u.segments() + v.segments() + 1));
    for (double p : {1.5, 2.0, 3.0}) {
      const double lhs = energy(c, p);
      const double rhs = std::pow(T + 1.0, p - 1.0) * (energy(u, p) + energy(restrict_to(v, T), p));
      EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, rhs));
    }
  }
}

TEST(SignalAlgebra, RestrictDistanceAndPairing) {
  const auto v = ControlSignal({0.0, 1.0, 3.0}, Mat{{1.0}, {2.0}});
  const auto r = restrict_to(v, 2.0);
  EXPECT_EQ(r.breakpoints(), (std::vector<double>{0.0, 1.0, 2.0}));
  EXPECT_DOUBLE_EQ(lp_distance(v, r, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(pairing(v, r), 1.0 + 4.0);
  EXPECT_THROW(restrict_to(v, 3.5), InvalidArgument);
  const auto c = concatenate(r, v);
  EXPECT_DOUBLE_EQ(c.horizon(), 5.0);
  EXPECT_EQ(c.segments(), 4);
}
