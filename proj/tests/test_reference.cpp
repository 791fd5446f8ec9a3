#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "rhsim/errors.hpp"
#include "rhsim/kernel.hpp"
#include "rhsim/reference.hpp"
#include "rhsim/volscheme.hpp"

using namespace rhsim;

namespace {

using cplx = std::complex<double>;

// Two-probability Heston formula with the rotation-count-free logarithm,
// integrated by composite Simpson on a long uniform grid.
double heston_call_two_prob(const HestonEquivalent& h, double K, double T, double r) {
  const double x = std::log(h.S0);
  const double kappa = h.kappa, theta = h.theta_bar, sigma = h.sigma, rho = h.rho;
  auto integrand = [&](int j, double phi) {
    const double u = j == 1 ? 0.5 : -0.5;
    const double b = j == 1 ? kappa - rho * sigma : kappa;
    const cplx i(0.0, 1.0);
    const cplx beta = b - rho * sigma * i * phi;
    const cplx d = std::sqrt(beta * beta - sigma * sigma * (2.0 * u * i * phi - phi * phi));
    const cplx g = (beta - d) / (beta + d);
    const cplx e = std::exp(-d * T);
    const cplx C = r * i * phi * T +
                   kappa * theta / (sigma * sigma) * ((beta - d) * T - 2.0 * std::log((1.0 - g * e) / (1.0 - g)));
    const cplx D = (beta - d) / (sigma * sigma) * (1.0 - e) / (1.0 - g * e);
    const cplx f = std::exp(C + D * h.V0 + i * phi * x);
    return std::real(std::exp(-i * phi * std::log(K)) * f / (i * phi));
  };
  auto prob = [&](int j) {
    const double a = 1e-9, b = 400.0;
    const int n = 200000;
    const double step = (b - a) / n;
    double acc = integrand(j, a) + integrand(j, b);
    for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * integrand(j, a + k * step);
    return 0.5 + acc * step / 3.0 / M_PI;
  };
  return h.S0 * prob(1) - K * std::exp(-r * T) * prob(2);
}

HestonEquivalent preset_heston() {
  const ModelParams p;
  return heston_equivalent(p, preset("H0.1/T1/N1", p.V0));
}

}  // namespace

TEST(NormalCdf, AgainstHighPrecisionErf) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  for (double x : {-8.0, -3.3, -1.0, -0.1, 0.0, 0.25, 1.7, 6.0}) {
    const Big exact = boost::math::erfc(-Big(x) / boost::multiprecision::sqrt(Big(2))) / 2;
    EXPECT_NEAR(normal_cdf(x), static_cast<double>(exact), 1e-15) << x;
  }
}

TEST(BlackScholes, Examples) {
  EXPECT_NEAR(black_scholes_price(1.0, 1.0, 1.0, 1e-12, OptionSide::Call), 0.0, 1e-12);
  const double atm = 2.0 * normal_cdf(0.1) - 1.0;
  EXPECT_NEAR(black_scholes_price(1.0, 1.0, 1.0, 0.2, OptionSide::Call), atm, 1e-15);
  EXPECT_NEAR(atm, 0.0796557, 1e-7);
  EXPECT_NEAR(black_scholes_price(1.3, 1e-12, 1.0, 0.2, OptionSide::Call), 1.3, 1e-11);
  // Parity on the forward.
  const double c = black_scholes_price(1.1, 0.95, 0.5, 0.3, OptionSide::Call);
  const double p = black_scholes_price(1.1, 0.95, 0.5, 0.3, OptionSide::Put);
  EXPECT_NEAR(c - p, 1.1 - 0.95, 1e-15);
}

TEST(BlackScholes, IncreasingInVolatility) {
  for (double k : {-0.3, -0.05, 0.0, 0.1}) {
    double prev = 0.0;
    for (int i = 5; i <= 60; ++i) {
      const double sigma = 0.02 * i;
      const double price = black_scholes_price(1.0, std::exp(k), 0.7, sigma, OptionSide::Call);
      EXPECT_GT(price, prev);
      EXPECT_GT(black_scholes_vega(1.0, std::exp(k), 0.7, sigma), 0.0);
      prev = price;
    }
  }
}

TEST(BlackScholes, VegaMatchesFiniteDifference) {
  const double eps = 1e-6;
  const double fd = (black_scholes_price(1.0, 1.05, 0.8, 0.25 + eps, OptionSide::Call) -
                     black_scholes_price(1.0, 1.05, 0.8, 0.25 - eps, OptionSide::Call)) /
                    (2 * eps);
  EXPECT_NEAR(black_scholes_vega(1.0, 1.05, 0.8, 0.25), fd, 1e-8);
}

TEST(HestonEquivalent, Mapping) {
  const ModelParams p;
  const HestonEquivalent h = heston_equivalent(p, preset("H0.1/T1/N1", p.V0));
  const double x = 2.1649, w = 2.6233;
  EXPECT_DOUBLE_EQ(h.kappa, x + w * p.lambda);
  EXPECT_DOUBLE_EQ(h.sigma, w * p.nu);
  EXPECT_NEAR(h.kappa * h.theta_bar, x * p.V0 + w * p.theta, 1e-15);
  EXPECT_EQ(h.V0, p.V0);
  EXPECT_EQ(h.rho, p.rho);
  EXPECT_THROW(heston_equivalent(p, preset("H0.1/T1/N2", p.V0)), DomainError);
}

TEST(HestonEquivalent, FactorAndCirTrajectoriesCoincide) {
  // Both recursions run the Strang trinomial scheme: one on the factor V^1,
  // the other on V = w V^1 with the classical Heston drift.
  const ModelParams p;
  const KernelApprox k = preset("H0.1/T1/N1", p.V0);
  const HestonEquivalent h = heston_equivalent(p, k);
  const std::size_t M = 8;
  const double dt = p.T / M;
  const VolPropagator prop(p, k, dt);
  const double decay = std::exp(-h.kappa * 0.5 * dt);
  const double w = k.weights[0];

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  StepCounters counters;
  double worst = 0.0;
  for (int path = 0; path < 1000000; ++path) {
    std::vector<double> v = k.v0split;
    double cir = h.V0;
    for (std::size_t m = 0; m < M; ++m) {
      const double u = unif(rng);
      prop.cir_step(v, u, counters);
      cir = h.theta_bar + (cir - h.theta_bar) * decay;
      cir = sample_trinomial(trinomial_law(cir, h.sigma * h.sigma * dt), u);
      cir = h.theta_bar + (cir - h.theta_bar) * decay;
      worst = std::max(worst, std::abs(w * v[0] - cir));
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(HestonFourier, MatchesTwoProbabilityFormula) {
  const HestonEquivalent h = preset_heston();
  for (double k : {-0.1, -0.03, 0.0, 0.05}) {
    const double K = std::exp(k);
    EXPECT_NEAR(heston_call_fourier(h, K, 1.0, 0.0), heston_call_two_prob(h, K, 1.0, 0.0), 1e-8) << k;
  }
  HestonEquivalent big = h;
  big.S0 = 100.0;
  for (double K : {90.0, 105.0}) {
    EXPECT_NEAR(heston_call_fourier(big, K, 1.0, 0.06), heston_call_two_prob(big, K, 1.0, 0.06), 1e-6)
        << K;
  }
  const HestonEquivalent textbook{2.0, 0.04, 0.5, -0.5, 0.03, 1.0};
  for (double T : {0.25, 2.0}) {
    EXPECT_NEAR(heston_call_fourier(textbook, 1.02, T, 0.01),
                heston_call_two_prob(textbook, 1.02, T, 0.01), 1e-8)
        << T;
  }
}

TEST(HestonFourier, ZeroVolOfVolIsBlackScholes) {
  HestonEquivalent h = preset_heston();
  h.sigma = 0.0;
  const double T = 0.75;
  const double integrated =
      h.theta_bar * T + (h.V0 - h.theta_bar) * (1.0 - std::exp(-h.kappa * T)) / h.kappa;
  for (double K : {0.9, 1.0, 1.1}) {
    const double bs = black_scholes_price(1.0, K, T, std::sqrt(integrated / T), OptionSide::Call);
    EXPECT_NEAR(heston_call_fourier(h, K, T, 0.0), bs, 1e-14);
    // Just above the switch the integral route must agree as well.
    HestonEquivalent tiny = h;
    tiny.sigma = 1e-6;
    EXPECT_NEAR(heston_call_fourier(tiny, K, T, 0.0), bs, 1e-7);
  }
}

TEST(HestonFourier, PutCallParity) {
  HestonEquivalent h = preset_heston();
  h.S0 = 100.0;
  for (double K : {80.0, 100.0, 105.0, 130.0}) {
    const double call = heston_call_fourier(h, K, 1.0, 0.06);
    const double put = heston_put_fourier(h, K, 1.0, 0.06);
    EXPECT_NEAR(call - put, 100.0 - K * std::exp(-0.06), 1e-12) << K;
  }
}

TEST(HestonFourier, IncreasingInInitialVariance) {
  HestonEquivalent h = preset_heston();
  double prev = 0.0;
  for (int i = 1; i <= 10; ++i) {
    h.V0 = 0.005 * i;
    const double price = heston_call_fourier(h, 1.0, 1.0, 0.0);
    EXPECT_GT(price, prev);
    prev = price;
  }
}

TEST(HestonFourier, RejectsBadInputs) {
  const HestonEquivalent h = preset_heston();
  EXPECT_THROW(heston_call_fourier(h, -1.0, 1.0, 0.0), DomainError);
  EXPECT_THROW(heston_call_fourier(h, 1.0, 0.0, 0.0), DomainError);
}

TEST(OptionSide, Names) {
  EXPECT_EQ(option_side_from_string("call"), OptionSide::Call);
  EXPECT_EQ(option_side_from_string("put"), OptionSide::Put);
  EXPECT_STREQ(to_string(OptionSide::Put), "put");
  EXPECT_THROW(option_side_from_string("straddle"), ConfigError);
}
