#include "rhsim/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rhsim/errors.hpp"

namespace rhsim {

double KernelApprox::weight_sum() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void KernelApprox::validate(double V0) const {
  const std::size_t n = nodes.size();
  if (n == 0) throw DomainError("kernel approximation needs at least one node");
  if (weights.size() != n || v0split.size() != n) {
    throw DomainError("kernel approximation: nodes, weights and v0split differ in length");
  }
  if (nodes[0] < 0.0) throw DomainError("kernel approximation: nodes must be non-negative");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(nodes[i] > nodes[i - 1])) {
      throw DomainError("kernel approximation: nodes must be strictly increasing");
    }
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw DomainError("kernel approximation: weights must be positive");
  }
  const double total = std::inner_product(weights.begin(), weights.end(), v0split.begin(), 0.0);
  if (std::abs(total - V0) > 1e-12 * std::max(std::abs(V0), 1e-300)) {
    std::ostringstream msg;
    msg << "kernel approximation: w . v0split = " << total << " differs from V0 = " << V0;
    throw DomainError(msg.str());
  }
}

std::vector<double> default_v0split(const std::vector<double>& weights, double V0) {
  const double wbar = std::accumulate(weights.begin(), weights.end(), 0.0);
  return std::vector<double>(weights.size(), V0 / wbar);
}

KernelApprox make_kernel(std::vector<double> nodes, std::vector<double> weights, double V0) {
  KernelApprox k;
  k.v0split = default_v0split(weights, V0);
  k.nodes = std::move(nodes);
  k.weights = std::move(weights);
  return k;
}

double fractional_kernel(double t, double H) {
  if (!(t > 0.0)) throw DomainError("fractional kernel is undefined for t <= 0");
  if (!(H > -0.5 && H <= 0.5)) throw DomainError("Hurst parameter must lie in (-1/2, 1/2]");
  return std::pow(t, H - 0.5) / std::tgamma(H + 0.5);
}

double approx_eval(const KernelApprox& k, double t) {
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) sum += k.weights[i] * std::exp(-k.nodes[i] * t);
  return sum;
}

namespace {

// Integral of K^N over [0, t].
double approx_integral(const KernelApprox& k, double t) {
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double x = k.nodes[i];
    sum += x == 0.0 ? k.weights[i] * t : -k.weights[i] * std::expm1(-x * t) / x;
  }
  return sum;
}

constexpr int kSamplesPerPanel = 64;
constexpr double kRelTol = 1e-10;

}  // namespace

double l1_error(const KernelApprox& k, double H, double T) {
  if (!(T > 0.0)) throw DomainError("l1_error needs a positive horizon");
  if (!(H > -0.5 && H <= 0.5)) throw DomainError("Hurst parameter must lie in (-1/2, 1/2]");

  auto diff = [&](double t) { return fractional_kernel(t, H) - approx_eval(k, t); };
  auto abs_diff = [&](double t) { return std::abs(diff(t)); };

  const double eps = 1e-12 * T;
  double total = 0.0;

  auto integrate_smooth = [&](double a, double b) {
    double err = 0.0;
    double l1 = 0.0;
    // Boost reports errors in the units of the reference interval, so
    // integrate over [0, 1] to keep them comparable to the value.
    const double len = b - a;
    auto mapped = [&](double s) { return len * abs_diff(a + len * s); };
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        mapped, 0.0, 1.0, 20, kRelTol, &err, &l1);
    if (!(err <= 1e-8 * std::max(l1, 1e-300) + 1e-300) || !std::isfinite(value)) {
      std::ostringstream msg;
      msg << "l1_error: quadrature on [" << a << ", " << b << "] did not converge (estimate "
          << value << ", error " << err << ")";
      throw NumericalError(msg.str());
    }
    return value;
  };

  // Innermost panel: for H < 1/2 the singular K dominates K^N there, so the
  // integral of |K - K^N| is the difference of the exact integrals.
  if (H < 0.5 && fractional_kernel(eps, H) >= k.weight_sum()) {
    total += std::pow(eps, H + 0.5) / std::tgamma(H + 1.5) - approx_integral(k, eps);
  } else {
    total += integrate_smooth(0.0, eps);
  }

  // Dyadic panels [T 2^-(j+1), T 2^-j] down to eps.
  std::vector<double> edges{T};
  while (edges.back() * 0.5 > eps) edges.push_back(edges.back() * 0.5);
  edges.push_back(eps);
  std::reverse(edges.begin(), edges.end());

  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p];
    const double b = edges[p + 1];
    std::vector<double> cuts{a};
    double t_prev = a;
    double f_prev = diff(a);
    for (int s = 1; s <= kSamplesPerPanel; ++s) {
      const double t = a + (b - a) * s / kSamplesPerPanel;
      const double f = diff(t);
      if ((f_prev < 0.0 && f > 0.0) || (f_prev > 0.0 && f < 0.0)) {
        double lo = t_prev, hi = t, f_lo = f_prev;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double f_mid = diff(mid);
          if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
          } else {
            hi = mid;
          }
        }
        cuts.push_back(0.5 * (lo + hi));
      }
      t_prev = t;
      f_prev = f;
    }
    cuts.push_back(b);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      if (cuts[c + 1] > cuts[c]) total += integrate_smooth(cuts[c], cuts[c + 1]);
    }
  }
  return total;
}

namespace {

struct PresetEntry {
  double H;
  const char* horizon;
  std::vector<double> nodes;
  std::vector<double> weights;
};

const std::vector<PresetEntry>& preset_table() {
  static const std::vector<PresetEntry> table{
      {0.1, "T1", {2.1649}, {2.6233}},
      {0.1, "T1", {0.05, 8.7171}, {0.76733, 3.2294}},
      {0.1, "T1", {0.033333, 2.2416, 46.831}, {0.55543, 1.1110, 6.0858}},
      {-0.2, "T1", {0.49172, 60.452}, {0.70202, 33.927}},
      {-0.2, "T1", {0.63781, 9.6554, 681.37}, {0.66909, 3.3694, 184.50}},
      {0.1, "surface16", {0.20000, 34.868}, {1.3360, 5.6228}},
      {0.1, "surface16", {0.083995, 5.6485, 118.01}, {0.80386, 1.6079, 8.8078}},
  };
  return table;
}

std::string key_of(const PresetEntry& e) {
  std::ostringstream key;
  key << 'H' << e.H << '/' << e.horizon << "/N" << e.nodes.size();
  return key.str();
}

}  // namespace

std::vector<std::string> preset_keys() {
  std::vector<std::string> keys;
  for (const auto& e : preset_table()) keys.push_back(key_of(e));
  return keys;
}

KernelApprox preset(double H, std::string_view horizon_key, int N, double V0) {
  for (const auto& e : preset_table()) {
    if (std::abs(e.H - H) < 1e-12 && horizon_key == e.horizon &&
        static_cast<int>(e.nodes.size()) == N) {
      return make_kernel(e.nodes, e.weights, V0);
    }
  }
  std::ostringstream msg;
  msg << "no kernel preset for H=" << H << ", horizon " << horizon_key << ", N=" << N
      << "; available:";
  for (const auto& key : preset_keys()) msg << ' ' << key;
  throw LookupError(msg.str());
}

KernelApprox preset(std::string_view key, double V0) {
  for (const auto& e : preset_table()) {
    if (key == key_of(e)) return make_kernel(e.nodes, e.weights, V0);
  }
  std::ostringstream msg;
  msg << "unknown kernel preset '" << key << "'; available:";
  for (const auto& k : preset_keys()) msg << ' ' << k;
  throw LookupError(msg.str());
}

}  // namespace rhsim
