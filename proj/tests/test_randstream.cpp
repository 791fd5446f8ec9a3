#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "rhsim/engine.hpp"
#include "rhsim/errors.hpp"
#include "rhsim/randstream.hpp"

using namespace rhsim;

namespace {

std::vector<double> drain(RandomStream& s) {
  std::vector<double> out;
  std::vector<double> p(s.spec().dimension);
  while (s.remaining() > 0) {
    s.next_point(p);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

double coordinate(const SobolSequence& s, std::size_t d) {
  return static_cast<double>(s.point()[d]) / 4294967296.0;
}

}  // namespace

TEST(Sobol, FirstCoordinateIsVanDerCorput) {
  SobolSequence s(1);
  s.seek(0);
  const double expected[] = {0.0, 0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125};
  for (double e : expected) {
    EXPECT_EQ(coordinate(s, 0), e);
    s.advance();
  }
}

TEST(Sobol, SeekMatchesAdvance) {
  SobolSequence a(40), b(40);
  a.seek(1);
  for (int i = 1; i < 1000; ++i) a.advance();
  b.seek(1000);
  EXPECT_EQ(a.index(), b.index());
  for (std::size_t d = 0; d < 40; ++d) EXPECT_EQ(a.point()[d], b.point()[d]);
}

TEST(Sobol, ElementaryIntervals) {
  const std::size_t max_dim = SobolSequence::max_dimension();
  ASSERT_GE(max_dim, std::size_t{1} << 14);
  std::vector<std::size_t> dims;
  for (std::size_t d = 0; d < 64; ++d) dims.push_back(d);
  for (std::size_t d : {1000u, 5000u, 12287u, 16383u}) dims.push_back(d);
  dims.push_back(max_dim - 1);

  SobolSequence s(max_dim);
  for (int k = 1; k <= 12; ++k) {
    const std::size_t n = std::size_t{1} << k;
    std::vector<std::vector<int>> hits(dims.size(), std::vector<int>(n, 0));
    s.seek(0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dims.size(); ++j) ++hits[j][s.point()[dims[j]] >> (32 - k)];
      s.advance();
    }
    for (std::size_t j = 0; j < dims.size(); ++j) {
      for (std::size_t b = 0; b < n; ++b) ASSERT_EQ(hits[j][b], 1) << "dim " << dims[j] << " k " << k;
    }
  }
}

TEST(Sobol, RejectsUnsupportedDimension) {
  EXPECT_THROW(SobolSequence(0), DomainError);
  EXPECT_THROW(SobolSequence(SobolSequence::max_dimension() + 1), DomainError);
}

TEST(RandomStream, ShiftIsAppliedModuloOne) {
  const StreamSpec spec{StreamKind::SobolShifted, 1, 3, 4, 17};
  RandomStream s(spec);
  const std::vector<double> pts = drain(s);
  ASSERT_EQ(pts.size(), 12u);
  // The stream skips Sobol index 0, so replicate points are 0.5, 0.75, 0.25, 0.375.
  const double raw[] = {0.5, 0.75, 0.25, 0.375};
  for (std::size_t r = 0; r < 3; ++r) {
    const double shift = s.shift_of(r)[0];
    for (std::size_t i = 0; i < 4; ++i) {
      double expected = raw[i] + shift;
      if (expected >= 1.0) expected -= 1.0;
      EXPECT_EQ(pts[r * 4 + i], expected);
      EXPECT_GE(pts[r * 4 + i], 0.0);
      EXPECT_LT(pts[r * 4 + i], 1.0);
    }
  }
  EXPECT_NE(s.shift_of(0)[0], s.shift_of(1)[0]);
  EXPECT_NEAR(std::fmod(0.9 + 0.3, 1.0), 0.2, 1e-15);
}

TEST(RandomStream, ReplayIsBitwiseIdentical) {
  for (StreamKind kind : {StreamKind::Pseudo, StreamKind::SobolShifted}) {
    const StreamSpec spec{kind, 7, 3, 50, 123};
    RandomStream a(spec), b(spec);
    EXPECT_EQ(drain(a), drain(b));
    StreamSpec other = spec;
    other.seed = 124;
    RandomStream c(other), d(spec);
    EXPECT_NE(drain(c), drain(d));
  }
}

TEST(RandomStream, ExhaustionThrows) {
  const StreamSpec spec{StreamKind::Pseudo, 2, 1, 3, 1};
  RandomStream s(spec);
  drain(s);
  std::vector<double> p(2);
  EXPECT_THROW(s.next_point(p), StreamExhausted);
}

TEST(RandomStream, PseudoUniformsLookUniform) {
  const StreamSpec spec{StreamKind::Pseudo, 4, 1, 50000, 9};
  RandomStream s(spec);
  const std::vector<double> pts = drain(s);
  const double mean = std::accumulate(pts.begin(), pts.end(), 0.0) / pts.size();
  EXPECT_NEAR(mean, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / pts.size()));
  for (double u : pts) {
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Partition, ContiguousRanges) {
  const StreamSpec spec{StreamKind::SobolShifted, 2, 2, 4, 3};
  const std::vector<RandomStream> parts = partition(spec, 2);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].begin(), 0u);
  EXPECT_EQ(parts[0].end(), 4u);
  EXPECT_EQ(parts[1].begin(), 4u);
  EXPECT_EQ(parts[1].end(), 8u);

  const std::vector<RandomStream> one = partition(spec, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].begin(), 0u);
  EXPECT_EQ(one[0].end(), 8u);
}

TEST(Partition, ConcatenationReplaysSerialStream) {
  for (StreamKind kind : {StreamKind::Pseudo, StreamKind::SobolShifted}) {
    const StreamSpec spec{kind, 5, 3, 37, 77};
    RandomStream serial(spec);
    const std::vector<double> expected = drain(serial);
    for (std::size_t workers : {1u, 2u, 3u, 7u}) {
      std::vector<RandomStream> parts = partition(spec, workers);
      std::vector<double> joined;
      for (RandomStream& p : parts) {
        const std::vector<double> chunk = drain(p);
        joined.insert(joined.end(), chunk.begin(), chunk.end());
      }
      EXPECT_EQ(joined, expected) << workers;
    }
  }
}

TEST(Rqmc, LinearIntegrandIsUnbiased) {
  // f(u) = sum_d c_d u_d integrates to sum_d c_d / 2.
  const std::size_t dim = 12;
  const StreamSpec spec{StreamKind::SobolShifted, dim, 32, 256, 2718};
  RandomStream s(spec);
  std::vector<double> p(dim), means(spec.shifts, 0.0);
  double exact = 0.0;
  for (std::size_t d = 0; d < dim; ++d) exact += 0.5 * (1.0 + d);
  for (std::size_t r = 0; r < spec.shifts; ++r) {
    for (std::size_t i = 0; i < spec.points_per_shift; ++i) {
      s.next_point(p);
      for (std::size_t d = 0; d < dim; ++d) means[r] += (1.0 + d) * p[d];
    }
    means[r] /= spec.points_per_shift;
  }
  const EstimateWithCI est = estimate_from_replicates(means);
  const double se = est.half_width / student_t_975(spec.shifts - 1);
  EXPECT_LE(std::abs(est.value - exact), 3.0 * se + 1e-12);
}

TEST(InvNormalCdf, AgainstErfInverse) {
  EXPECT_EQ(inv_normal_cdf(0.5), 0.0);
  EXPECT_NEAR(inv_normal_cdf(0.975), 1.959964, 1e-6);
  for (double u : {1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999, 1.0 - 1e-12}) {
    const double oracle = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
    EXPECT_NEAR(inv_normal_cdf(u), oracle, 1e-9 * std::max(1.0, std::abs(oracle))) << u;
  }
  // Dyadic u keeps 1 - u exact.
  for (double u : {0x1p-30, 0x1p-7, 0.1875, 0.4375}) EXPECT_EQ(inv_normal_cdf(1.0 - u), -inv_normal_cdf(u));
}

TEST(InvNormalCdf, DomainErrors) {
  EXPECT_THROW(inv_normal_cdf(0.0), DomainError);
  EXPECT_THROW(inv_normal_cdf(1.0), DomainError);
  EXPECT_THROW(inv_normal_cdf(std::nan("")), DomainError);
  EXPECT_TRUE(std::isfinite(normal_from_uniform(0.0)));
}

TEST(StreamSpec, Validation) {
  EXPECT_THROW((StreamSpec{StreamKind::Pseudo, 0, 1, 1, 0}.validate()), ConfigError);
  EXPECT_THROW((StreamSpec{StreamKind::Pseudo, 1, 0, 1, 0}.validate()), ConfigError);
  EXPECT_THROW(stream_kind_from_string("halton"), ConfigError);
  EXPECT_EQ(stream_kind_from_string("sobol"), StreamKind::SobolShifted);
  EXPECT_EQ(stream_kind_from_string("pseudo"), StreamKind::Pseudo);
}
