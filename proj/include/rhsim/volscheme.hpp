#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rhsim/kernel.hpp"
#include "rhsim/model.hpp"
#include "rhsim/smallmat.hpp"

namespace rhsim {

// Event counters accumulated by the steppers. A clamp event is a negative
// total variance w . V that had to be replaced by its positive part.
struct StepCounters {
  std::uint64_t clamp_events = 0;

  StepCounters& operator+=(const StepCounters& o) {
    clamp_events += o.clamp_events;
    return *this;
  }
};

// Three-atom law matching the first three moments of Y_h for dY = sqrt(Y) dW~
// started at x with variance parameter z.
struct TrinomialLaw {
  std::array<double, 3> atoms{};  // ascending
  std::array<double, 3> probs{};

  bool is_dirac() const { return probs[1] == 0.0 && probs[2] == 0.0; }
};

// A = (6 + sqrt(3)) / 4.
inline constexpr double kTrinomialA = 1.9330127018922193;

// Throws DomainError on negative x or z. Degenerate inputs (z or x ~ 0)
// produce a point mass at x.
TrinomialLaw trinomial_law(double x, double z);

// Inverse-CDF draw: x1 if u < p1, x2 if u < p1 + p2, else x3.
double sample_trinomial(const TrinomialLaw& law, double u);

// Exact solution of the linear drift ODE over h: exp(A h) v + h phi1(A h) b.
std::vector<double> drift_step(const DriftMatrix& drift, std::span<const double> v, double h);

// Weak second-order propagator for the factor vector: half drift, trinomial
// diffusion step, half drift. The half-step drift maps are computed once.
class VolPropagator {
 public:
  VolPropagator(const ModelParams& params, const KernelApprox& kernel, double h);

  std::size_t dimension() const { return weights_.size(); }
  double step_size() const { return h_; }
  double weight_sum() const { return wbar_; }
  double z() const { return z_; }
  double nu() const { return nu_; }
  std::span<const double> weights() const { return weights_; }
  const DriftMatrix& drift() const { return drift_; }
  const Matrix& half_exp() const { return half_exp_; }
  std::span<const double> half_offset() const { return half_offset_; }

  double total(std::span<const double> v) const;

  // v <- D(v, h/2) using the cached maps.
  void half_drift(std::span<double> v) const;

  // v <- v + (Yhat - w.v) / wbar with Yhat drawn from trinomial_law(w.v, z).
  // Negative w.v is clamped to 0 for the law and counted.
  void stochastic(std::span<double> v, double u, StepCounters& counters) const;

  // v <- D(S(D(v, h/2), h), h/2).
  void cir_step(std::span<double> v, double u, StepCounters& counters) const;

 private:
  std::vector<double> weights_;
  double wbar_;
  double nu_;
  double h_;
  double z_;
  DriftMatrix drift_;
  Matrix half_exp_;
  std::vector<double> half_offset_;  // (h/2) phi1(A h/2) b
};

// Stochastic substep with an explicit step size (the member uses the cached z).
std::vector<double> stochastic_step(const VolPropagator& p, std::span<const double> v, double h,
                                    double u, StepCounters& counters);

}  // namespace rhsim
