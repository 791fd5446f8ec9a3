#include "rhsim/pathscheme.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "rhsim/errors.hpp"
#include "rhsim/randstream.hpp"

namespace rhsim {

MarketState initial_state(const ModelParams& params, const KernelApprox& kernel) {
  MarketState s;
  s.S = params.S0;
  s.V = kernel.v0split;
  s.Y.assign(kernel.size(), 0.0);
  s.t = 0.0;
  return s;
}

StockCoefficients stock_coefficients(const ModelParams& params, const KernelApprox& kernel) {
  if (params.nu == 0.0) {
    throw DomainError("stock_coefficients: vol-of-vol must be non-zero");
  }
  const std::size_t n = kernel.size();
  StockCoefficients k;
  k.c.assign(n, 0.0);
  k.c[0] = params.rho / params.nu;
  const double csum = k.c[0];
  k.a = -params.theta * csum;
  for (std::size_t i = 0; i < n; ++i) k.a -= k.c[i] * kernel.nodes[i] * kernel.v0split[i];
  k.b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    k.b[i] = k.c[i] * kernel.nodes[i] + params.lambda * kernel.weights[i] * csum -
             0.5 * params.nu * params.nu * kernel.weights[i] * csum * csum;
  }
  return k;
}

double ConstraintResiduals::max_abs() const {
  double m = std::max(std::abs(drift), std::abs(diffusion));
  for (double f : factor) m = std::max(m, std::abs(f));
  return m;
}

ConstraintResiduals constraint_residuals(const StockCoefficients& coeffs,
                                         const ModelParams& params,
                                         const KernelApprox& kernel) {
  const std::size_t n = kernel.size();
  const double csum = std::accumulate(coeffs.c.begin(), coeffs.c.end(), 0.0);
  ConstraintResiduals r;
  r.drift = coeffs.a + params.theta * csum;
  for (std::size_t i = 0; i < n; ++i) r.drift += coeffs.c[i] * kernel.nodes[i] * kernel.v0split[i];
  r.factor.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.factor[i] = coeffs.b[i] - coeffs.c[i] * kernel.nodes[i] -
                  params.lambda * kernel.weights[i] * csum +
                  0.5 * params.nu * params.nu * kernel.weights[i] * csum * csum;
  }
  r.diffusion = params.nu * csum - params.rho;
  return r;
}

void bs_substep(MarketState& state, const ModelParams& params, std::span<const double> weights,
                double h, double g, StepCounters& counters) {
  double v = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) v += weights[i] * state.V[i];
  if (v < 0.0) {
    v = 0.0;
    ++counters.clamp_events;
  }
  const double var = v * (1.0 - params.rho * params.rho) * h;
  state.S *= std::exp(std::sqrt(var) * g - 0.5 * var);
}

WeakScheme::WeakScheme(const ModelParams& params, const KernelApprox& kernel, double h)
    : params_(params),
      h_(h),
      prop_(params, kernel, h),
      coeffs_(stock_coefficients(params, kernel)),
      idio_var_rate_((1.0 - params.rho * params.rho) * h) {}

double WeakScheme::w_log_increment(MarketState& state, double u_tri,
                                   StepCounters& counters) const {
  const std::size_t n = prop_.dimension();
  std::array<double, kMaxFactors> v_old;
  std::copy_n(state.V.begin(), n, v_old.begin());
  prop_.cir_step(state.V, u_tri, counters);

  double exponent = coeffs_.a * h_;
  for (std::size_t i = 0; i < n; ++i) {
    const double dy = 0.5 * h_ * (v_old[i] + state.V[i]);
    state.Y[i] += dy;
    exponent += coeffs_.b[i] * dy + coeffs_.c[i] * (state.V[i] - v_old[i]);
  }
  return exponent;
}

double WeakScheme::b_log_increment(const MarketState& state, double g,
                                   StepCounters& counters) const {
  double v = prop_.total(state.V);
  if (v < 0.0) {
    v = 0.0;
    ++counters.clamp_events;
  }
  const double var = v * idio_var_rate_;
  return std::sqrt(var) * g - 0.5 * var;
}

void WeakScheme::w_substep(MarketState& state, double u_tri, StepCounters& counters) const {
  state.S *= std::exp(w_log_increment(state, u_tri, counters));
}

void WeakScheme::b_substep(MarketState& state, double g, StepCounters& counters) const {
  state.S *= std::exp(b_log_increment(state, g, counters));
}

void WeakScheme::step(MarketState& state, std::span<const double> u,
                      StepCounters& counters) const {
  // Both substeps only rescale S, so their exponents can be summed; the order
  // still matters through the V at which the Black-Scholes part is taken.
  const double g = normal_from_uniform(u[1]);
  double x;
  if (u[2] <= 0.5) {
    x = b_log_increment(state, g, counters);
    x += w_log_increment(state, u[0], counters);
  } else {
    x = w_log_increment(state, u[0], counters);
    x += b_log_increment(state, g, counters);
  }
  state.S *= std::exp(x);
  state.t += h_;
}

namespace {

Matrix euler_system(const ModelParams& params, const KernelApprox& kernel, double h) {
  const std::size_t n = kernel.size();
  Matrix m = Matrix::identity(n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) += h * kernel.nodes[i];
    for (std::size_t j = 0; j < n; ++j) m(i, j) += h * params.lambda * kernel.weights[j];
  }
  return m;
}

}  // namespace

EulerScheme::EulerScheme(const ModelParams& params, const KernelApprox& kernel, double h)
    : params_(params),
      h_(h),
      weights_(kernel.weights),
      drift_(kernel.size()),
      system_(euler_system(params, kernel, h)) {
  if (kernel.size() > kMaxFactors) throw DomainError("EulerScheme: too many factors");
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    drift_[i] = h * (kernel.nodes[i] * kernel.v0split[i] + params.theta);
  }
}

void EulerScheme::step_normals(MarketState& state, double gW, double gB,
                               StepCounters& counters) const {
  const std::size_t n = weights_.size();
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) v += weights_[i] * state.V[i];
  if (v < 0.0) {
    v = 0.0;
    ++counters.clamp_events;
  }
  const double sv = std::sqrt(v);
  const double sh = std::sqrt(h_);
  const double dW = sh * gW;
  const double dB = sh * gB;
  const double noise = params_.nu * sv * dW;

  std::array<double, kMaxFactors> rhs;
  for (std::size_t i = 0; i < n; ++i) {
    state.Y[i] += h_ * state.V[i];
    rhs[i] = state.V[i] + drift_[i] + noise;
  }
  system_.solve_in_place(std::span<double>(rhs.data(), n));
  std::copy_n(rhs.begin(), n, state.V.begin());

  const double rho = params_.rho;
  state.S *= 1.0 + sv * (rho * dW + std::sqrt(1.0 - rho * rho) * dB);
  state.t += h_;
}

void EulerScheme::step(MarketState& state, std::span<const double> u,
                       StepCounters& counters) const {
  step_normals(state, normal_from_uniform(u[0]), normal_from_uniform(u[1]), counters);
}

}  // namespace rhsim
