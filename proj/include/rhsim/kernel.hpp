#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rhsim {

// Sum-of-exponentials surrogate K^N(t) = sum_i w_i exp(-x_i t) of the
// fractional kernel, together with the split of V0 over the factors.
struct KernelApprox {
  std::vector<double> nodes;    // mean-reversion speeds x_i, strictly increasing
  std::vector<double> weights;  // w_i > 0
  std::vector<double> v0split;  // initial factor values, w . v0split = V0

  std::size_t size() const { return nodes.size(); }
  double weight_sum() const;

  // Throws DomainError if the node/weight/split invariants fail for V0.
  void validate(double V0) const;
};

// Equal split v0^i = V0 / sum_j w_j.
std::vector<double> default_v0split(const std::vector<double>& weights, double V0);

// Builds a kernel from explicit nodes and weights with the default split.
KernelApprox make_kernel(std::vector<double> nodes, std::vector<double> weights, double V0);

// t^(H-1/2) / Gamma(H+1/2). Throws DomainError for t <= 0 or H outside (-1/2, 1/2].
double fractional_kernel(double t, double H);

// sum_i w_i exp(-x_i t), t >= 0.
double approx_eval(const KernelApprox& k, double t);

// Integral over [0, T] of |K(t) - K^N(t)|.
//
// The integrable singularity at 0 is handled analytically on [0, 1e-12 T] and
// by dyadic panels above it; sign changes of K - K^N are bracketed and
// bisected so that each adaptive Gauss-Kronrod piece integrates a smooth
// function. Throws NumericalError if a piece fails to reach the target.
double l1_error(const KernelApprox& k, double H, double T);

// Published node/weight tables, addressed by (H, horizon key, N) or by the
// string key "H<h>/<horizon>/N<n>", e.g. "H0.1/T1/N2".
KernelApprox preset(double H, std::string_view horizon_key, int N, double V0);
KernelApprox preset(std::string_view key, double V0);
std::vector<std::string> preset_keys();

}  // namespace rhsim
