#include "rhsim/reference.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rhsim/errors.hpp"

namespace rhsim {

const char* to_string(OptionSide side) { return side == OptionSide::Call ? "call" : "put"; }

OptionSide option_side_from_string(const std::string& name) {
  if (name == "call") return OptionSide::Call;
  if (name == "put") return OptionSide::Put;
  throw ConfigError("unknown option side '" + name + "' (expected call or put)");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double black_scholes_price(double F, double K, double T, double sigma, OptionSide side) {
  const double intrinsic_call = std::max(F - K, 0.0);
  const double sd = sigma * std::sqrt(T);
  double call;
  if (K <= 0.0) {
    call = F - K;
  } else if (!(sd > 0.0)) {
    call = intrinsic_call;
  } else {
    const double d1 = (std::log(F / K) + 0.5 * sd * sd) / sd;
    call = F * normal_cdf(d1) - K * normal_cdf(d1 - sd);
  }
  return side == OptionSide::Call ? call : call - (F - K);
}

double black_scholes_vega(double F, double K, double T, double sigma) {
  const double sd = sigma * std::sqrt(T);
  if (!(sd > 0.0) || K <= 0.0) return 0.0;
  const double d1 = (std::log(F / K) + 0.5 * sd * sd) / sd;
  return F * std::sqrt(T) * std::exp(-0.5 * d1 * d1) / std::sqrt(2.0 * std::numbers::pi);
}

HestonEquivalent heston_equivalent(const ModelParams& params, const KernelApprox& kernel) {
  if (kernel.size() != 1) {
    throw DomainError("heston_equivalent: only one-factor approximations reduce to Heston");
  }
  const double x = kernel.nodes[0];
  const double w = kernel.weights[0];
  HestonEquivalent h;
  h.kappa = x + w * params.lambda;
  h.sigma = w * params.nu;
  h.theta_bar = h.kappa > 0.0 ? (x * params.V0 + w * params.theta) / h.kappa : 0.0;
  h.rho = params.rho;
  h.V0 = params.V0;
  h.S0 = params.S0;
  return h;
}

namespace {

using cplx = std::complex<double>;

// log(1 + z) without cancellation for small |z|.
cplx log1p(cplx z) {
  const double re = std::log1p(2.0 * z.real() + std::norm(z)) * 0.5;
  return {re, std::atan2(z.imag(), 1.0 + z.real())};
}

// E[exp(i u log(S_T / F))] in the rotation-free form. xi - d is rewritten as
// -sigma^2 q / (xi + d) so that nothing is divided by sigma^2 after a
// cancellation, which keeps small vol-of-vol accurate.
cplx heston_cf(const HestonEquivalent& h, cplx u, double T) {
  const cplx i(0.0, 1.0);
  const double s2 = h.sigma * h.sigma;
  const cplx q = u * u + i * u;
  const cplx xi = h.kappa - h.sigma * h.rho * i * u;
  const cplx d = std::sqrt(xi * xi + s2 * q);
  const cplx ratio = -q / (xi + d);  // (xi - d) / sigma^2
  const cplx g = ratio / (xi + d) * s2;
  const cplx e = std::exp(-d * T);
  const cplx D = ratio * (1.0 - e) / (1.0 - g * e);
  const cplx log_term = log1p(-g * e) - log1p(-g);
  const cplx C = h.kappa * h.theta_bar * (ratio * T - 2.0 * log_term / s2);
  return std::exp(C + D * h.V0);
}

double deterministic_total_variance(const HestonEquivalent& h, double T) {
  if (h.kappa * T < 1e-12) return h.V0 * T + 0.5 * h.kappa * (h.theta_bar - h.V0) * T * T;
  return h.theta_bar * T + (h.V0 - h.theta_bar) * (1.0 - std::exp(-h.kappa * T)) / h.kappa;
}

}  // namespace

double heston_call_fourier(const HestonEquivalent& h, double K, double T, double r) {
  if (!(T > 0.0) || !(K > 0.0) || !(h.S0 > 0.0) || !(h.V0 >= 0.0)) {
    throw DomainError("heston_call_fourier: invalid inputs");
  }
  const double F = h.S0 * std::exp(r * T);
  const double discount = std::exp(-r * T);
  if (h.sigma < 1e-10) {
    const double iv = std::max(deterministic_total_variance(h, T), 0.0);
    return discount * black_scholes_price(F, K, 1.0, std::sqrt(iv), OptionSide::Call);
  }
  const double k = std::log(F / K);
  auto integrand = [&](double u) {
    const cplx phi = heston_cf(h, cplx(u, -0.5), T);
    return (std::exp(cplx(0.0, u * k)) * phi).real() / (u * u + 0.25);
  };
  double err = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, std::numeric_limits<double>::infinity(), 20, 1e-13, &err);
  if (!std::isfinite(integral) || err > 1e-9 * std::max(1.0, std::abs(integral))) {
    std::ostringstream msg;
    msg << "heston_call_fourier: quadrature did not converge (estimate " << integral
        << ", error " << err << ")";
    throw NumericalError(msg.str());
  }
  const double call = F - std::sqrt(F * K) / std::numbers::pi * integral;
  return discount * call;
}

double heston_put_fourier(const HestonEquivalent& h, double K, double T, double r) {
  return heston_call_fourier(h, K, T, r) - h.S0 + K * std::exp(-r * T);
}

}  // namespace rhsim
