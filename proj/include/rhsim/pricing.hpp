#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rhsim/engine.hpp"
#include "rhsim/kernel.hpp"
#include "rhsim/model.hpp"
#include "rhsim/randstream.hpp"
#include "rhsim/reference.hpp"

namespace rhsim {

// Black-Scholes volatility matching an undiscounted price on the forward.
// Throws NumericalError when the price lies outside the no-arbitrage band.
double implied_vol(double price, double F, double K, double T, OptionSide side = OptionSide::Call);

// Log-moneyness grid -0.10, -0.09, ..., 0.05.
std::vector<double> standard_log_strikes();

struct SmileRequest {
  double maturity = 1.0;
  std::vector<double> log_strikes = standard_log_strikes();
  OptionSide side = OptionSide::Call;
  SchemeKind scheme = SchemeKind::Weak;
  std::size_t steps = 1;
  StreamSpec stream;
  unsigned threads = 1;

  void validate() const;
};

struct StrikeEstimate {
  double log_strike = 0.0;
  double strike = 0.0;
  EstimateWithCI price;  // discounted
  // Implied vol of the mean price; half-width is the price half-width over
  // vega. NaN when the price is outside the no-arbitrage band.
  EstimateWithCI iv;
};

struct SmileResult {
  double maturity = 0.0;
  std::vector<StrikeEstimate> strikes;
  StepCounters counters;
  double seconds = 0.0;
};

SmileResult price_european(const SmileRequest& req, const ModelParams& model,
                           const KernelApprox& kernel);

struct SurfaceRequest {
  std::vector<double> maturities;                // ascending, last one is the horizon
  std::vector<std::vector<double>> log_strikes;  // one grid per maturity
  OptionSide side = OptionSide::Call;
  SchemeKind scheme = SchemeKind::Weak;
  std::size_t steps = 1;  // over the longest maturity
  StreamSpec stream;
  unsigned threads = 1;

  // Maturities i T / n with the standard grid scaled by sqrt(T_i).
  static SurfaceRequest uniform(std::size_t maturity_count, double horizon);
  void validate() const;
  // Step index at which each maturity is observed.
  std::vector<std::size_t> observation_steps() const;
};

struct SurfaceResult {
  std::vector<SmileResult> smiles;
  StepCounters counters;
  double seconds = 0.0;
};

SurfaceResult price_surface(const SurfaceRequest& req, const ModelParams& model,
                            const KernelApprox& kernel);

struct AsianRequest {
  double maturity = 1.0;
  std::vector<double> log_strikes = standard_log_strikes();
  SchemeKind scheme = SchemeKind::Weak;
  std::size_t steps = 1;
  StreamSpec stream;
  unsigned threads = 1;
};

// Geometric Asian calls on exp(trapezoid of log S / T). `iv` is left NaN.
SmileResult price_geometric_asian(const AsianRequest& req, const ModelParams& model,
                                  const KernelApprox& kernel);

// Monomials s^d1 v^d2 (v^1)^d3 ... (v^{N-1})^d_{N+1} with weighted degree
// d1 + 2 d2 + 3 (d3 + ...) <= d, constant excluded.
class FeatureBasis {
 public:
  FeatureBasis(std::size_t factors, int degree);

  std::size_t factors() const { return factors_; }
  int degree() const { return degree_; }
  std::size_t size() const { return exponents_.size(); }
  std::size_t variables() const { return factors_ + 1; }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  // vars = (s, v, v^1, ..., v^{N-1}); out has size().
  void evaluate(std::span<const double> vars, std::span<double> out) const;

 private:
  std::size_t factors_;
  int degree_;
  std::vector<std::vector<int>> exponents_;
};

std::size_t feature_count(std::size_t factors, int degree);

// Normalised regression variables for a state observed at an exercise date.
void bermudan_variables(double S, std::span<const double> V, double K,
                        const KernelApprox& kernel, double V0, std::span<double> out);

struct BermudanRequest {
  double strike = 105.0;
  double maturity = 1.0;
  std::size_t exercise_dates = 4;
  SchemeKind scheme = SchemeKind::Weak;
  std::size_t steps = 256;
  int degree = 6;
  // Each shift's Sobol points are split in half: the first half fits the
  // stopping rule, the second half prices with it.
  StreamSpec stream;
  unsigned threads = 1;

  void validate() const;
};

struct BermudanResult {
  EstimateWithCI price;      // out-of-sample, stopping rule frozen
  EstimateWithCI european;   // European put on the pricing paths
  EstimateWithCI in_sample;  // backward-induction value on the regression paths
  std::size_t features = 0;
  StepCounters counters;
  double seconds = 0.0;
};

BermudanResult price_bermudan_put(const BermudanRequest& req, const ModelParams& model,
                                  const KernelApprox& kernel);

}  // namespace rhsim
