#include "rhsim/volscheme.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rhsim/errors.hpp"

namespace rhsim {

namespace {

TrinomialLaw dirac(double x) {
  TrinomialLaw law;
  law.atoms = {x, x, x};
  law.probs = {1.0, 0.0, 0.0};
  return law;
}

[[noreturn, gnu::noinline, gnu::cold]] void throw_negative(double x, double z) {
  std::ostringstream msg;
  msg << "trinomial_law: negative input (x=" << x << ", z=" << z << ")";
  throw DomainError(msg.str());
}

[[noreturn, gnu::noinline, gnu::cold]] void throw_bad_sum(double sum, double x, double z) {
  std::ostringstream msg;
  msg << "trinomial_law: probabilities sum to " << sum << " at x=" << x << ", z=" << z;
  throw NumericalError(msg.str());
}

}  // namespace

TrinomialLaw trinomial_law(double x, double z) {
  if (!(x >= 0.0) || !(z >= 0.0)) throw_negative(x, z);
  if (z <= 1e-14 * std::max(x, 1.0) || x <= 1e-14) return dirac(x);

  constexpr double A = kTrinomialA;
  const double root = std::sqrt((3.0 * x + A * A * z) * z);
  // Atom offsets from x. The lower one uses (Az)^2 - root^2 = -3xz to avoid
  // cancellation when x << z.
  const std::array<double, 3> d{-3.0 * x * z / (A * z + root), (A - 0.75) * z, A * z + root};

  // Numerators E[Y (Y - x_j)(Y - x_k)] written through the central moments
  // E[D^2] = xz and E[D^3] = 3/2 x z^2 of the exact increment D = Y_h - x.
  auto numerator = [&](double dj, double dk) {
    return x * (x * z + dj * dk + 1.5 * z * z - (dj + dk) * z);
  };

  TrinomialLaw law;
  for (int i = 0; i < 3; ++i) law.atoms[i] = x + d[i];
  // Lagrange quotients over a common denominator; the unnormalised sum and
  // the normalising reciprocal are independent, so the divisions overlap.
  const double den0 = law.atoms[0] * (d[0] - d[1]) * (d[0] - d[2]);
  const double den1 = law.atoms[1] * (d[1] - d[0]) * (d[1] - d[2]);
  const double den2 = law.atoms[2] * (d[2] - d[0]) * (d[2] - d[1]);
  const double n0 = numerator(d[1], d[2]) * (den1 * den2);
  const double n1 = numerator(d[0], d[2]) * (den0 * den2);
  const double n2 = numerator(d[0], d[1]) * (den0 * den1);
  const double total = n0 + n1 + n2;
  const double sum = total / (den0 * den1 * den2);
  if (!(std::abs(sum - 1.0) <= 1e-9)) throw_bad_sum(sum, x, z);
  const double scale = 1.0 / total;
  law.probs = {n0 * scale, n1 * scale, n2 * scale};
  return law;
}

double sample_trinomial(const TrinomialLaw& law, double u) {
  if (u < law.probs[0]) return law.atoms[0];
  if (u < law.probs[0] + law.probs[1]) return law.atoms[1];
  return law.atoms[2];
}

std::vector<double> drift_step(const DriftMatrix& drift, std::span<const double> v, double h) {
  const Matrix e = mat_exp(drift.A, h);
  const Matrix p = phi1(drift.A, h);
  std::vector<double> out = multiply(e, v);
  const std::vector<double> offset = multiply(p, drift.b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += offset[i];
  return out;
}

VolPropagator::VolPropagator(const ModelParams& params, const KernelApprox& kernel, double h)
    : weights_(kernel.weights),
      wbar_(kernel.weight_sum()),
      nu_(params.nu),
      h_(h),
      z_(params.nu * params.nu * wbar_ * wbar_ * h),
      drift_(params.lambda, params.theta, kernel.weights, kernel.nodes, kernel.v0split),
      half_exp_(mat_exp(drift_.A, 0.5 * h)),
      half_offset_(multiply(phi1(drift_.A, 0.5 * h), drift_.b)) {
  if (!(h >= 0.0)) throw DomainError("VolPropagator: step must be non-negative");
  if (kernel.size() > kMaxFactors) {
    std::ostringstream msg;
    msg << "VolPropagator: at most " << kMaxFactors << " factors are supported";
    throw DomainError(msg.str());
  }
  if (!(wbar_ > 0.0)) throw DomainError("VolPropagator: weights must sum to a positive value");
  if (!half_exp_.all_finite()) throw NumericalError("VolPropagator: non-finite drift propagator");
}

double VolPropagator::total(std::span<const double> v) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) acc += weights_[i] * v[i];
  return acc;
}

void VolPropagator::half_drift(std::span<double> v) const {
  const std::size_t n = weights_.size();
  const double* e = half_exp_.row(0).data();
  const double* c = half_offset_.data();
  if (n == 1) {
    v[0] = e[0] * v[0] + c[0];
    return;
  }
  if (n == 2) {
    const double a = e[0] * v[0] + e[1] * v[1] + c[0];
    const double b = e[2] * v[0] + e[3] * v[1] + c[1];
    v[0] = a;
    v[1] = b;
    return;
  }
  std::array<double, kMaxFactors> tmp;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = c[i];
    for (std::size_t j = 0; j < n; ++j) acc += e[i * n + j] * v[j];
    tmp[i] = acc;
  }
  std::copy_n(tmp.begin(), n, v.begin());
}

void VolPropagator::stochastic(std::span<double> v, double u, StepCounters& counters) const {
  const double x = total(v);
  double x_law = x;
  if (x < 0.0) {
    x_law = 0.0;
    ++counters.clamp_events;
  }
  const double y = sample_trinomial(trinomial_law(x_law, z_), u);
  const double shift = (y - x) / wbar_;
  for (std::size_t i = 0; i < weights_.size(); ++i) v[i] += shift;
}

void VolPropagator::cir_step(std::span<double> v, double u, StepCounters& counters) const {
  half_drift(v);
  stochastic(v, u, counters);
  half_drift(v);
}

std::vector<double> stochastic_step(const VolPropagator& p, std::span<const double> v, double h,
                                    double u, StepCounters& counters) {
  std::vector<double> out(v.begin(), v.end());
  double x = p.total(v);
  const double x_raw = x;
  if (x < 0.0) {
    x = 0.0;
    ++counters.clamp_events;
  }
  const double wbar = p.weight_sum();
  const double z = p.nu() * p.nu() * wbar * wbar * h;
  const double y = sample_trinomial(trinomial_law(x, z), u);
  for (double& vi : out) vi += (y - x_raw) / wbar;
  return out;
}

}  // namespace rhsim
