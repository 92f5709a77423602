#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fmdp/confidence.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/rng.hpp"

using namespace fmdp;

// Reference values: scripts/oracles/confidence_oracle.py (mpmath, 50 digits).

TEST(Beta, MatchesHighPrecisionOracle) {
  EXPECT_NEAR(beta(10, 0.05), 10.154780424549108, 1e-12);
  EXPECT_NEAR(beta(100, 0.01), 13.483418424921727, 1e-12);
  EXPECT_NEAR(beta(3, 0.05), 8.553360717493053, 1e-12);
  EXPECT_NEAR(beta(1e6, 1e-4), 21.084022028937328, 1e-11);
}

TEST(Beta, EtaIsPinned) { EXPECT_EQ(kPeelingEta, 1.12); }

TEST(Beta, SmallCountsUseFlooredLogs) {
  EXPECT_NEAR(beta(1, 0.05), 8.2327371832273812, 1e-12);
  EXPECT_EQ(beta(1, 0.05), beta(2, 0.05));
  EXPECT_GT(beta(1, 0.5), 0.0);
}

TEST(Beta, RejectsBadArguments) {
  EXPECT_THROW(beta(1, 0.0), precondition_error);
  EXPECT_THROW(beta(1, 1.0), precondition_error);
  EXPECT_THROW(beta(0.5, 0.1), precondition_error);
  EXPECT_THROW(beta_prime(1, 1.5), precondition_error);
}

TEST(BetaPrime, MatchesHighPrecisionOracle) {
  EXPECT_NEAR(beta_prime(1, 0.1), 3.2552472614374585, 1e-12);
  EXPECT_NEAR(beta_prime(99, 0.05), 0.32881285469065237, 1e-13);
  EXPECT_NEAR(beta_prime(1e4, 0.001), 0.047987762523411408, 1e-14);
}

TEST(BetaPrime, DecreasingInCountOnGrid) {
  for (double delta : {0.5, 0.1, 0.01, 1e-4}) {
    double prev = beta_prime(1, delta);
    for (int n = 2; n <= 10'000; ++n) {
      const double v = beta_prime(n, delta);
      ASSERT_LT(v, prev) << "n=" << n << " delta=" << delta;
      prev = v;
    }
  }
}

TEST(BetaPrime, ApproachesLimitingFormAsDeltaGrowsToOne) {
  for (double n : {1e3, 1e5, 1e7}) {
    const double limit = std::sqrt(2.0 * std::log(std::sqrt(n + 1.0)) / n);
    EXPECT_NEAR(beta_prime(n, 1.0 - 1e-12), limit, 1e-3 * limit);
  }
}

TEST(Thresholds, StrictlyDecreaseInDelta) {
  for (double n : {1.0, 5.0, 100.0, 1e6}) {
    double b = beta(n, 1e-6), bp = beta_prime(n, 1e-6);
    for (double delta : {1e-5, 1e-3, 0.01, 0.1, 0.5, 0.9}) {
      EXPECT_LT(beta(n, delta), b);
      EXPECT_LT(beta_prime(n, delta), bp);
      EXPECT_LT(l1_radius(n, 3, delta, L1Variant::laplace), l1_radius(n, 3, delta / 2, L1Variant::laplace));
      b = beta(n, delta);
      bp = beta_prime(n, delta);
    }
  }
}

TEST(RewardInterval, PaperMaxExample) {
  EXPECT_NEAR(0.5 * beta_prime(100, 0.01), 0.18684027602276775, 1e-13);
  const double w = reward_half_width(0.25, 100, 0.01, RewardBonus::paper_max);
  EXPECT_NEAR(w, 0.57426111241180102, 1e-12);
  const auto iv = reward_interval(0.5, 0.25, 100, 0.01);
  EXPECT_EQ(iv.lo, 0.0);
  EXPECT_EQ(iv.hi, 1.0);
}

TEST(RewardInterval, TightMinExample) {
  const double w = reward_half_width(0.25, 100, 0.01, RewardBonus::tight_min);
  EXPECT_NEAR(w, 0.18684027602276775, 1e-13);
  const auto iv = reward_interval(0.5, 0.25, 100, 0.01, RewardBonus::tight_min);
  EXPECT_NEAR(iv.lo, 0.5 - 0.18684027602276775, 1e-13);
  EXPECT_NEAR(iv.hi, 0.5 + 0.18684027602276775, 1e-13);
}

TEST(RewardInterval, BernsteinBranchWinsUnderTightMinAtLowVariance) {
  EXPECT_NEAR(reward_half_width(0.01, 1000, 0.02, RewardBonus::tight_min), 0.048244371263983844, 1e-13);
  EXPECT_NEAR(reward_half_width(0.01, 1000, 0.02, RewardBonus::paper_max), 0.060719711772540728, 1e-13);
}

TEST(RewardInterval, ShrinksAtLargeCounts) {
  for (double mu : {0.0, 0.3, 1.0}) {
    const auto iv = reward_interval(mu, 0.0, 1e8, 0.01);
    EXPECT_LT(iv.width(), 1e-2);
    EXPECT_TRUE(iv.contains(mu));
  }
}

TEST(RewardInterval, PaperMaxContainsTightMin) {
  for (double mu = 0.0; mu <= 1.0; mu += 0.125) {
    for (double var : {0.0, 0.05, 0.25}) {
      for (double n : {1.0, 3.0, 50.0, 1e4}) {
        const auto wide = reward_interval(mu, var, n, 0.05, RewardBonus::paper_max);
        const auto tight = reward_interval(mu, var, n, 0.05, RewardBonus::tight_min);
        EXPECT_LE(wide.lo, tight.lo);
        EXPECT_GE(wide.hi, tight.hi);
      }
    }
  }
}

TEST(RewardInterval, RejectsOutOfRangeInputs) {
  EXPECT_THROW(reward_interval(1.2, 0.1, 10, 0.1), precondition_error);
  EXPECT_THROW(reward_interval(0.5, 0.3, 10, 0.1), precondition_error);
  EXPECT_THROW(reward_interval(0.5, 0.1, 0, 0.1), precondition_error);
}

TEST(BernsteinInterval, EndpointsMatchRootAndGridOracles) {
  // p_hat = 0.5, N = 100, beta = 5: |0.5 - q| = sqrt(q (1-q) / 10) + 1/60.
  const auto iv = bernstein_interval_with_threshold(0.5, 100, 5);
  EXPECT_NEAR(iv.lo, 0.33416897102482643, 1e-12);
  EXPECT_NEAR(iv.hi, 0.66583102897517357, 1e-12);
  // 1e6-point grid scan: first and last feasible grid points
  EXPECT_NEAR(iv.lo, 0.334169, 1e-6);
  EXPECT_NEAR(iv.hi, 0.665831, 1e-6);

  const auto edge = bernstein_interval_with_threshold(0.0, 10, 3);
  EXPECT_EQ(edge.lo, 0.0);
  EXPECT_NEAR(edge.hi, 0.48717082451262845, 1e-12);

  const auto skew = bernstein_interval_with_threshold(0.9, 40, 8);
  EXPECT_NEAR(skew.lo, 0.51729479772629279, 1e-12);
  EXPECT_NEAR(skew.hi, 0.99760179343486039, 1e-12);
}

TEST(BernsteinInterval, EndpointsSatisfyInequalityAndNeighboursViolateIt) {
  SplitMix64 rng(5);
  for (int k = 0; k < 2000; ++k) {
    const double p_hat = k % 10 == 0 ? double(k % 20 == 0) : rng.uniform();
    const double n = 1.0 + std::floor(1000.0 * rng.uniform());
    const double b = 0.5 + 20.0 * rng.uniform();
    const auto iv = bernstein_interval_with_threshold(p_hat, n, b);
    ASSERT_TRUE(iv.contains(p_hat));
    ASSERT_GE(bernstein_slack(p_hat, n, b, iv.lo), -1e-9);
    ASSERT_GE(bernstein_slack(p_hat, n, b, iv.hi), -1e-9);
    if (iv.lo - 1e-6 >= 0.0) {
      ASSERT_FALSE(bernstein_contains(p_hat, n, b, iv.lo - 1e-6));
    }
    if (iv.hi + 1e-6 <= 1.0) {
      ASSERT_FALSE(bernstein_contains(p_hat, n, b, iv.hi + 1e-6));
    }
  }
}

TEST(BernsteinInterval, ExtremeEstimatesKeepInteriorWidth) {
  for (double n : {1.0, 10.0, 1000.0}) {
    const double b = beta(n, 0.01);
    const double reach = std::min(1.0, b / (3 * n));
    EXPECT_GE(bernstein_interval_with_threshold(0.0, n, b).hi, reach);
    EXPECT_LE(bernstein_interval_with_threshold(1.0, n, b).lo, 1.0 - reach);
  }
}

TEST(BernsteinInterval, MembershipTestAgreesWithEndpoints) {
  // The coverage suites test p in the interval through bernstein_contains;
  // this pins that shortcut to the bisected endpoints.
  SplitMix64 rng(11);
  for (int k = 0; k < 20'000; ++k) {
    const double p_hat = std::round(rng.uniform() * 50.0) / 50.0;
    const double n = 1.0 + std::floor(500.0 * rng.uniform());
    const double b = beta(n, 0.01);
    const double q = rng.uniform();
    const auto iv = bernstein_interval_with_threshold(p_hat, n, b);
    const bool by_slack = bernstein_contains(p_hat, n, b, q);
    const bool by_interval = iv.contains(q);
    if (by_slack != by_interval) {
      // only possible within a few ulps of an endpoint
      ASSERT_LT(std::min(std::abs(q - iv.lo), std::abs(q - iv.hi)), 1e-12);
    }
  }
}

TEST(BernsteinInterval, CoverageSmallMonteCarlo) {
  SplitMix64 rng(99);
  const double delta = 0.1, p = 0.3;
  int failures = 0;
  const int trials = 300;
  for (int k = 0; k < trials; ++k) {
    int ones = 0;
    for (int n = 1; n <= 1000; ++n) {
      ones += rng.bernoulli(p);
      if (!bernstein_contains(ones / double(n), n, beta(n, delta), p)) {
        ++failures;
        break;
      }
    }
  }
  EXPECT_LE(failures / double(trials), delta + 0.05);
}

TEST(L1Radius, MatchesHighPrecisionOracle) {
  EXPECT_NEAR(l1_radius(1, 1, 0.5, L1Variant::weissman_union, 1), 2.0393339803376179, 1e-13);
  EXPECT_NEAR(std::sqrt(2.0 * std::log(8.0)), 2.0393339803376179, 1e-13);
  EXPECT_NEAR(l1_radius(50, 3, 0.001, L1Variant::weissman_union, 1000), 0.9550645397869053, 1e-13);
  EXPECT_NEAR(l1_radius(100, 2, 0.01, L1Variant::laplace), 0.40943900775534072, 1e-13);
  EXPECT_NEAR(l1_radius(1, 6, 0.1, L1Variant::laplace), 5.2184448896711327, 1e-12);
}

TEST(L1Radius, DecreasingInCount) {
  for (auto variant : {L1Variant::weissman_union, L1Variant::laplace}) {
    double prev = l1_radius(1, 4, 0.01, variant, 100);
    for (int n = 2; n <= 10'000; ++n) {
      const double w = l1_radius(n, 4, 0.01, variant, 100);
      ASSERT_LT(w, prev);
      prev = w;
    }
  }
}

TEST(L1Radius, RejectsBadArguments) {
  EXPECT_THROW(l1_radius(0, 2, 0.1, L1Variant::laplace), precondition_error);
  EXPECT_THROW(l1_radius(1, 0, 0.1, L1Variant::laplace), precondition_error);
  EXPECT_THROW(l1_radius(1, 2, 0.1, L1Variant::weissman_union, 0), precondition_error);
}
