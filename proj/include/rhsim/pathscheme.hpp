#pragma once

#include <span>
#include <vector>

#include "rhsim/kernel.hpp"
#include "rhsim/model.hpp"
#include "rhsim/smallmat.hpp"
#include "rhsim/volscheme.hpp"

namespace rhsim {

// Per-path state: stock, factors, integrated factors Y^i = int V^i dt, time.
struct MarketState {
  double S = 0.0;
  std::vector<double> V;
  std::vector<double> Y;
  double t = 0.0;
};

MarketState initial_state(const ModelParams& params, const KernelApprox& kernel);

// Coefficients of the exponential representation
//   S_t = s exp(a t + b . (Y_t - Y_0) + c . (V_t - V_0))
// of the W-driven stock dynamics, with c = (rho/nu, 0, ..., 0).
struct StockCoefficients {
  double a = 0.0;
  std::vector<double> b;
  std::vector<double> c;
};

// Throws DomainError when nu = 0.
StockCoefficients stock_coefficients(const ModelParams& params, const KernelApprox& kernel);

// Residuals of the three constraint families (drift, per-factor Y terms,
// diffusion) for a candidate coefficient set; all zero for a valid one.
struct ConstraintResiduals {
  double drift = 0.0;
  std::vector<double> factor;
  double diffusion = 0.0;

  double max_abs() const;
};
ConstraintResiduals constraint_residuals(const StockCoefficients& coeffs,
                                         const ModelParams& params,
                                         const KernelApprox& kernel);

// Exact B-driven substep: S <- S exp(sqrt(v(1-rho^2)) sqrt(h) g - v(1-rho^2) h / 2)
// with v = (w . V)^+; V and Y are frozen.
void bs_substep(MarketState& state, const ModelParams& params, std::span<const double> weights,
                double h, double g, StepCounters& counters);

// Weak second-order scheme (trinomial volatility step, trapezoidal Y,
// randomized Leapfrog composition). Consumes three uniforms per step in the
// order (trinomial, Gaussian for B, ordering).
class WeakScheme {
 public:
  static constexpr std::size_t kUniformsPerStep = 3;

  WeakScheme(const ModelParams& params, const KernelApprox& kernel, double h);

  double step_size() const { return h_; }
  const VolPropagator& propagator() const { return prop_; }
  const StockCoefficients& coefficients() const { return coeffs_; }

  // W-driven substep: V <- A_CIR(V), trapezoidal Y, exponential S update.
  void w_substep(MarketState& state, double u_tri, StepCounters& counters) const;
  void b_substep(MarketState& state, double g, StepCounters& counters) const;

  // The substeps as log-price increments; w_log_increment advances V and Y.
  double w_log_increment(MarketState& state, double u_tri, StepCounters& counters) const;
  double b_log_increment(const MarketState& state, double g, StepCounters& counters) const;

  // One full step; u = (u_tri, u_gauss, u_order). S^B runs first when
  // u_order <= 1/2.
  void step(MarketState& state, std::span<const double> u, StepCounters& counters) const;

 private:
  ModelParams params_;
  double h_;
  VolPropagator prop_;
  StockCoefficients coeffs_;
  double idio_var_rate_;  // (1 - rho^2) h
};

// Drift-implicit Euler baseline with truncated square roots. Consumes two
// uniforms per step, (W increment, B increment).
class EulerScheme {
 public:
  static constexpr std::size_t kUniformsPerStep = 2;

  EulerScheme(const ModelParams& params, const KernelApprox& kernel, double h);

  double step_size() const { return h_; }

  // Step driven by standard normals (gW, gB).
  void step_normals(MarketState& state, double gW, double gB, StepCounters& counters) const;
  void step(MarketState& state, std::span<const double> u, StepCounters& counters) const;

 private:
  ModelParams params_;
  double h_;
  std::vector<double> weights_;
  std::vector<double> drift_;  // h (diag(x) v0 + theta 1)
  LuFactorization system_;     // Id + h diag(x) + h lambda 1 w^T
};

}  // namespace rhsim
