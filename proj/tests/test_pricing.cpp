#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "rhsim/engine.hpp"
#include "rhsim/errors.hpp"
#include "rhsim/kernel.hpp"
#include "rhsim/pricing.hpp"
#include "rhsim/reference.hpp"

using namespace rhsim;

namespace {

StreamSpec small_stream(std::size_t shifts = 8, std::size_t points = 4096, std::uint64_t seed = 7) {
  return StreamSpec{StreamKind::SobolShifted, 1, shifts, points, seed};
}

double standard_error(const EstimateWithCI& e) {
  return e.half_width / student_t_975(e.replicates - 1);
}

SmileRequest smile_request(std::size_t steps, OptionSide side = OptionSide::Call) {
  SmileRequest req;
  req.steps = steps;
  req.side = side;
  req.stream = small_stream();
  return req;
}

// Records the terminal stock price so the two-node trapezoid can be formed
// outside the library's Asian observer.
class TerminalRecorder final : public PathObserver {
 public:
  TerminalRecorder(double K) : K_(K) {}
  void begin_path(std::size_t, const MarketState& state) override { s0_ = state.S; }
  void after_step(std::size_t, const MarketState& state) override { sT_ = state.S; }
  void end_path(std::span<double> payoffs) override {
    const double G = std::exp(0.5 * (std::log(s0_) + std::log(sT_)));
    payoffs[0] = std::max(G - K_, 0.0);
  }

 private:
  double K_;
  double s0_ = 0.0;
  double sT_ = 0.0;
};

// Counts exponent tuples by exhaustive search over the box [0, d]^(N+1).
std::size_t brute_force_features(std::size_t N, int d) {
  const std::size_t vars = N + 1;
  std::vector<int> e(vars, 0);
  std::size_t count = 0;
  while (true) {
    int weighted = 0, total = 0;
    for (std::size_t i = 0; i < vars; ++i) {
      weighted += e[i] * (i == 0 ? 1 : (i == 1 ? 2 : 3));
      total += e[i];
    }
    if (total > 0 && weighted <= d) ++count;
    std::size_t i = 0;
    while (i < vars && e[i] == d) e[i++] = 0;
    if (i == vars) break;
    ++e[i];
  }
  return count;
}

}  // namespace

TEST(ImpliedVol, RoundTrip) {
  for (double T : {0.25, 1.0, 2.0}) {
    for (double k : {-0.02, 0.0, 0.02}) {
      const double K = std::exp(k);
      for (double sigma = 0.01; sigma <= 2.0 + 1e-12; sigma += 0.01) {
        const double price = black_scholes_price(1.0, K, T, sigma, OptionSide::Call);
        EXPECT_NEAR(implied_vol(price, 1.0, K, T), sigma, 1e-8) << T << ' ' << k << ' ' << sigma;
      }
    }
  }
}

TEST(ImpliedVol, AtTheMoneyExample) {
  EXPECT_NEAR(implied_vol(0.0796557, 1.0, 1.0, 1.0), 0.2, 1e-6);
  const double exact = 2.0 * normal_cdf(0.1) - 1.0;
  EXPECT_NEAR(implied_vol(exact, 1.0, 1.0, 1.0), 0.2, 1e-12);
}

TEST(ImpliedVol, PutSide) {
  for (double sigma : {0.05, 0.2, 0.9}) {
    const double put = black_scholes_price(1.0, 1.05, 0.5, sigma, OptionSide::Put);
    EXPECT_NEAR(implied_vol(put, 1.0, 1.05, 0.5, OptionSide::Put), sigma, 1e-8);
  }
}

TEST(ImpliedVol, TendsToZeroAtIntrinsic) {
  const double K = 0.97, intrinsic = 1.0 - K;
  double prev = 1.0;
  for (double eps : {1e-3, 1e-5, 1e-7, 1e-9}) {
    const double sigma = implied_vol(intrinsic + eps, 1.0, K, 1.0);
    EXPECT_LT(sigma, prev);
    prev = sigma;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(ImpliedVol, OutsideBandCarriesBand) {
  try {
    implied_vol(0.01, 1.0, 0.9, 1.0);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("no-arbitrage band"), std::string::npos) << msg;
    EXPECT_NE(msg.find("0.1"), std::string::npos) << msg;
  }
  EXPECT_THROW(implied_vol(1.2, 1.0, 1.0, 1.0), NumericalError);
  EXPECT_THROW(implied_vol(0.1, 1.0, -1.0, 1.0), DomainError);
}

TEST(StandardGrid, SixteenValues) {
  const std::vector<double> k = standard_log_strikes();
  ASSERT_EQ(k.size(), 16u);
  EXPECT_DOUBLE_EQ(k.front(), -0.1);
  EXPECT_DOUBLE_EQ(k.back(), 0.05);
  for (std::size_t i = 1; i < k.size(); ++i) EXPECT_NEAR(k[i] - k[i - 1], 0.01, 1e-15);
}

TEST(European, DeepOutOfTheMoneyIsZero) {
  const ModelParams p;
  SmileRequest req = smile_request(8);
  req.log_strikes = {5.0};
  const SmileResult s = price_european(req, p, preset("H0.1/T1/N2", p.V0));
  const EstimateWithCI& e = s.strikes[0].price;
  EXPECT_GE(e.value, 0.0);
  EXPECT_LE(e.value, e.half_width);
  EXPECT_NEAR(e.value, 0.0, 1e-12);
  EXPECT_TRUE(std::isnan(s.strikes[0].iv.value));
}

TEST(European, PutCallParity) {
  ModelParams p;
  p.r = 0.04;
  const KernelApprox k = preset("H0.1/T1/N2", p.V0);
  const SmileResult call = price_european(smile_request(16, OptionSide::Call), p, k);
  const SmileResult put = price_european(smile_request(16, OptionSide::Put), p, k);
  ASSERT_EQ(call.strikes.size(), put.strikes.size());
  for (std::size_t i = 0; i < call.strikes.size(); ++i) {
    const double K = call.strikes[i].strike;
    const double parity = p.S0 - K * std::exp(-p.r * p.T);
    const double se = std::hypot(standard_error(call.strikes[i].price), standard_error(put.strikes[i].price));
    EXPECT_LE(std::abs(call.strikes[i].price.value - put.strikes[i].price.value - parity), 3.0 * se + 1e-12)
        << K;
    // Both sides invert to the same implied vol on common paths up to noise.
    EXPECT_NEAR(call.strikes[i].iv.value, put.strikes[i].iv.value,
                3.0 * (call.strikes[i].iv.half_width + put.strikes[i].iv.half_width));
  }
}

TEST(European, ImpliedVolsAreFiniteOnTheGrid) {
  const ModelParams p;
  const SmileResult s = price_european(smile_request(16), p, preset("H0.1/T1/N2", p.V0));
  for (const auto& e : s.strikes) {
    EXPECT_TRUE(std::isfinite(e.iv.value)) << e.log_strike;
    EXPECT_GT(e.iv.value, 0.05);
    EXPECT_LT(e.iv.value, 0.3);
    EXPECT_GE(e.iv.half_width, 0.0);
  }
}

TEST(Surface, SingleMaturityEqualsEuropean) {
  ModelParams p;
  p.r = 0.03;
  const KernelApprox k = preset("H0.1/T1/N2", p.V0);
  const SmileRequest sreq = smile_request(16);
  SurfaceRequest req;
  req.maturities = {1.0};
  req.log_strikes = {sreq.log_strikes};
  req.steps = 16;
  req.stream = sreq.stream;
  const SurfaceResult surf = price_surface(req, p, k);
  const SmileResult smile = price_european(sreq, p, k);
  ASSERT_EQ(surf.smiles.size(), 1u);
  for (std::size_t i = 0; i < smile.strikes.size(); ++i) {
    const double v = smile.strikes[i].price.value;
    EXPECT_NEAR(surf.smiles[0].strikes[i].price.value, v, 1e-14 * std::max(1.0, v));
    EXPECT_NEAR(surf.smiles[0].strikes[i].iv.value, smile.strikes[i].iv.value, 1e-10);
  }
}

TEST(Surface, ObservationSteps) {
  SurfaceRequest req = SurfaceRequest::uniform(16, 1.0);
  req.steps = 64;
  const std::vector<std::size_t> obs = req.observation_steps();
  ASSERT_EQ(obs.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(obs[i], 4 * (i + 1));
  req.steps = 40;
  EXPECT_THROW(req.validate(), ConfigError);
}

TEST(Surface, UniformGridScalesStrikes) {
  const SurfaceRequest req = SurfaceRequest::uniform(16, 1.0);
  ASSERT_EQ(req.maturities.size(), 16u);
  const std::vector<double> base = standard_log_strikes();
  for (std::size_t i = 0; i < 16; ++i) {
    const double T = (i + 1) / 16.0;
    EXPECT_NEAR(req.maturities[i], T, 1e-15);
    for (std::size_t j = 0; j < base.size(); ++j) {
      EXPECT_NEAR(req.log_strikes[i][j], base[j] * std::sqrt(T), 1e-15);
    }
  }
}

TEST(Surface, MaturitiesShareOnePathSet) {
  // The T=1/2 slice of a two-maturity surface is a plain European run to
  // T=1/2 with half the steps, but on different uniforms; it must agree
  // statistically.
  const ModelParams p;
  const KernelApprox k = preset("H0.1/T1/N2", p.V0);
  SurfaceRequest req = SurfaceRequest::uniform(2, 1.0);
  req.steps = 16;
  req.stream = small_stream();
  const SurfaceResult surf = price_surface(req, p, k);
  SmileRequest half = smile_request(8);
  half.maturity = 0.5;
  half.log_strikes = req.log_strikes[0];
  half.stream.seed = 99;
  const SmileResult smile = price_european(half, p, k);
  for (std::size_t i = 0; i < smile.strikes.size(); ++i) {
    const auto& a = surf.smiles[0].strikes[i].price;
    const auto& b = smile.strikes[i].price;
    EXPECT_LE(std::abs(a.value - b.value), 4.0 * std::hypot(standard_error(a), standard_error(b)) + 1e-4)
        << i;
  }
}

TEST(Asian, DegenerateModelGivesSpot) {
  ModelParams p;
  p.V0 = 0.0;
  p.theta = 0.0;
  p.S0 = 1.7;
  const KernelApprox k = preset("H0.1/T1/N2", p.V0);
  AsianRequest req;
  req.steps = 8;
  req.stream = small_stream(2, 64);
  req.log_strikes = {-40.0};
  const SmileResult s = price_geometric_asian(req, p, k);
  EXPECT_NEAR(s.strikes[0].price.value, p.S0 - s.strikes[0].strike, 1e-14);
  EXPECT_NEAR(s.strikes[0].price.half_width, 0.0, 1e-14);
}

TEST(Asian, SingleStepIsTwoNodeRule) {
  const ModelParams p;
  const KernelApprox k = preset("H0.1/T1/N2", p.V0);
  for (double logK : {-0.05, 0.0, 0.03}) {
    AsianRequest req;
    req.steps = 1;
    req.stream = small_stream(4, 1024);
    req.log_strikes = {logK};
    const SmileResult s = price_geometric_asian(req, p, k);

    SimulationSetup setup;
    setup.model = p;
    setup.kernel = k;
    setup.steps = 1;
    setup.stream = req.stream;
    const double K = p.S0 * std::exp(logK);
    const SimulationResult sim =
        simulate(setup, 1, [&] { return std::make_unique<TerminalRecorder>(K); });
    const EstimateWithCI manual = summarize(sim.replicates)[0];
    EXPECT_NEAR(s.strikes[0].price.value, manual.value, 1e-15);
  }
}

TEST(Asian, BelowEuropean) {
  const ModelParams p;
  const KernelApprox k = preset("H0.1/T1/N2", p.V0);
  AsianRequest areq;
  areq.steps = 16;
  areq.stream = small_stream();
  const SmileResult asian = price_geometric_asian(areq, p, k);
  const SmileResult euro = price_european(smile_request(16), p, k);
  for (std::size_t i = 0; i < asian.strikes.size(); ++i) {
    const auto& a = asian.strikes[i].price;
    const auto& e = euro.strikes[i].price;
    EXPECT_LE(a.value, e.value + 3.0 * std::hypot(standard_error(a), standard_error(e)))
        << asian.strikes[i].log_strike;
    EXPECT_TRUE(std::isnan(asian.strikes[i].iv.value));
  }
}

TEST(Features, PublishedTable) {
  const std::size_t table[3][10] = {
      {1, 3, 5, 8, 11, 15, 19, 24, 29, 35},
      {1, 3, 6, 10, 15, 22, 30, 40, 52, 66},
      {1, 3, 7, 12, 19, 30, 43, 60, 83, 110},
  };
  for (std::size_t N = 1; N <= 3; ++N) {
    for (int d = 1; d <= 10; ++d) EXPECT_EQ(feature_count(N, d), table[N - 1][d - 1]) << N << ' ' << d;
  }
}

TEST(Features, MatchBruteForceEnumeration) {
  for (std::size_t N = 1; N <= 6; ++N) {
    for (int d = 1; d <= 10; ++d) EXPECT_EQ(feature_count(N, d), brute_force_features(N, d)) << N << ' ' << d;
  }
}

TEST(Features, EvaluateMatchesDirectPowers) {
  const FeatureBasis basis(3, 6);
  EXPECT_EQ(basis.variables(), 4u);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<double> vars(4), out(basis.size());
  for (int trial = 0; trial < 20; ++trial) {
    for (double& v : vars) v = u(rng);
    basis.evaluate(vars, out);
    for (std::size_t f = 0; f < basis.size(); ++f) {
      double expected = 1.0;
      for (std::size_t v = 0; v < 4; ++v) expected *= std::pow(vars[v], basis.exponents()[f][v]);
      EXPECT_NEAR(out[f], expected, 1e-13 * std::max(1.0, std::abs(expected)));
    }
  }
  // Weighted degrees are non-decreasing and no tuple repeats.
  int prev = 0;
  for (std::size_t f = 0; f < basis.size(); ++f) {
    const auto& e = basis.exponents()[f];
    const int w = e[0] + 2 * e[1] + 3 * (e[2] + e[3]);
    EXPECT_GE(w, prev);
    EXPECT_LE(w, 6);
    prev = w;
    for (std::size_t g = 0; g < f; ++g) EXPECT_NE(basis.exponents()[g], e);
  }
}

TEST(Features, NormalisedVariables) {
  const KernelApprox k = make_kernel({0.05, 8.7171}, {0.76733, 3.2294}, 0.02);
  const std::vector<double> V{0.03, 0.001};
  std::vector<double> out(3);
  bermudan_variables(110.0, V, 100.0, k, 0.02, out);
  EXPECT_DOUBLE_EQ(out[0], 0.1);
  EXPECT_NEAR(out[1], 0.76733 * 0.03 + 3.2294 * 0.001 - 0.02, 1e-16);
  EXPECT_NEAR(out[2], 0.76733 * (0.03 - k.v0split[0]), 1e-16);
}

namespace {

BermudanRequest small_bermudan(std::size_t dates) {
  BermudanRequest req;
  req.strike = 105.0;
  req.exercise_dates = dates;
  req.steps = 16;
  req.degree = 3;
  req.stream = small_stream(8, 4096, 11);
  return req;
}

ModelParams bermudan_model() {
  ModelParams p;
  p.S0 = 100.0;
  p.r = 0.06;
  return p;
}

}  // namespace

TEST(Bermudan, SingleDateIsEuropean) {
  const ModelParams p = bermudan_model();
  const BermudanResult b = price_bermudan_put(small_bermudan(1), p, preset("H0.1/T1/N2", p.V0));
  EXPECT_DOUBLE_EQ(b.price.value, b.european.value);
  EXPECT_DOUBLE_EQ(b.price.half_width, b.european.half_width);
}

TEST(Bermudan, VanishingStrike) {
  const ModelParams p = bermudan_model();
  BermudanRequest req = small_bermudan(4);
  req.strike = 1e-6;
  const BermudanResult b = price_bermudan_put(req, p, preset("H0.1/T1/N2", p.V0));
  EXPECT_EQ(b.price.value, 0.0);
  EXPECT_EQ(b.european.value, 0.0);
}

TEST(Bermudan, OrderingAndLowBias) {
  const ModelParams p = bermudan_model();
  const KernelApprox k = preset("H0.1/T1/N2", p.V0);
  const BermudanResult b4 = price_bermudan_put(small_bermudan(4), p, k);
  const BermudanResult b16 = price_bermudan_put(small_bermudan(16), p, k);
  EXPECT_EQ(b4.features, feature_count(2, 3));

  // Same pricing paths, so the European columns coincide.
  EXPECT_EQ(b4.european.value, b16.european.value);
  EXPECT_LE(b4.european.value, b4.price.value + 3.0 * standard_error(b4.price));
  EXPECT_LE(b4.price.value,
            b16.price.value + 3.0 * std::hypot(standard_error(b4.price), standard_error(b16.price)));
  for (const BermudanResult* b : {&b4, &b16}) {
    EXPECT_LE(b->price.value,
              b->in_sample.value + 3.0 * std::hypot(standard_error(b->price), standard_error(b->in_sample)));
  }
  // Sanity on level: European put near 5.2 and an early-exercise premium.
  EXPECT_NEAR(b4.european.value, 5.24, 0.2);
  EXPECT_GT(b16.price.value, b4.european.value);
}

TEST(Bermudan, RejectsMisalignedGrid) {
  const ModelParams p = bermudan_model();
  BermudanRequest req = small_bermudan(3);
  EXPECT_THROW(price_bermudan_put(req, p, preset("H0.1/T1/N2", p.V0)), ConfigError);
  req = small_bermudan(4);
  req.stream.points_per_shift = 4095;
  EXPECT_THROW(price_bermudan_put(req, p, preset("H0.1/T1/N2", p.V0)), ConfigError);
}

TEST(Bermudan, HighDegreeStaysFinite) {
  // Degree 10 with three factors gives 110 strongly collinear monomials; the
  // truncated factorization must not blow up.
  ModelParams p = bermudan_model();
  BermudanRequest req = small_bermudan(4);
  req.degree = 10;
  req.stream = small_stream(2, 2048, 5);
  const BermudanResult b = price_bermudan_put(req, p, preset("H0.1/T1/N3", p.V0));
  EXPECT_EQ(b.features, 110u);
  EXPECT_TRUE(std::isfinite(b.price.value));
  EXPECT_GT(b.price.value, 0.0);
}
