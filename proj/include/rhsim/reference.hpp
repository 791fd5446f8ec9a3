#pragma once

#include <string>

#include "rhsim/kernel.hpp"
#include "rhsim/model.hpp"

namespace rhsim {

enum class OptionSide { Call, Put };

const char* to_string(OptionSide side);
OptionSide option_side_from_string(const std::string& name);

double normal_cdf(double x);

// Undiscounted Black-Scholes value on the forward F.
double black_scholes_price(double F, double K, double T, double sigma, OptionSide side);
double black_scholes_vega(double F, double K, double T, double sigma);

// Classical Heston parameters for the variance V = w_1 V^1 of a one-factor
// Markovian approximation.
struct HestonEquivalent {
  double kappa = 0.0;
  double theta_bar = 0.0;
  double sigma = 0.0;
  double rho = 0.0;
  double V0 = 0.0;
  double S0 = 1.0;
};

HestonEquivalent heston_equivalent(const ModelParams& params, const KernelApprox& kernel);

// Discounted Heston call price, by a damped Fourier integral along Im u = -1/2.
double heston_call_fourier(const HestonEquivalent& h, double K, double T, double r);
// Put by parity with the Fourier call.
double heston_put_fourier(const HestonEquivalent& h, double K, double T, double r);

}  // namespace rhsim
