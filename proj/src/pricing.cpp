#include "rhsim/pricing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "rhsim/errors.hpp"

namespace rhsim {

double implied_vol(double price, double F, double K, double T, OptionSide side) {
  if (!(F > 0.0) || !(K > 0.0) || !(T > 0.0)) {
    throw DomainError("implied_vol: forward, strike and maturity must be positive");
  }
  const double call = side == OptionSide::Call ? price : price + F - K;
  const double lower = std::max(F - K, 0.0);
  const double upper = F;
  if (!(call > lower && call < upper)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "implied_vol: price " << price << " outside the no-arbitrage band (" << lower << ", "
        << upper << ") in call terms";
    throw NumericalError(msg.str());
  }
  auto value = [&](double s) { return black_scholes_price(F, K, T, s, OptionSide::Call); };

  double lo = 0.0;
  double hi = 1.0;
  while (value(hi) < call) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw NumericalError("implied_vol: no volatility bracket found");
  }
  double sigma = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const double f = value(sigma) - call;
    if (f > 0.0) {
      hi = sigma;
    } else {
      lo = sigma;
    }
    if (std::abs(f) <= 1e-15 * F || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      break;
    }
    const double vega = black_scholes_vega(F, K, T, sigma);
    double next = vega > 0.0 ? sigma - f / vega : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    sigma = next;
  }
  return sigma;
}

std::vector<double> standard_log_strikes() {
  std::vector<double> k(16);
  for (int i = 0; i < 16; ++i) k[i] = (i - 10) / 100.0;
  return k;
}

void SmileRequest::validate() const {
  if (!(maturity > 0.0)) throw ConfigError("smile: maturity must be positive");
  if (log_strikes.empty()) throw ConfigError("smile: log-strike grid is empty");
  for (double k : log_strikes) {
    if (!std::isfinite(k)) throw ConfigError("smile: log-strike grid must be finite");
  }
  if (steps == 0) throw ConfigError("smile: at least one time step is required");
}

namespace {

SimulationSetup make_setup(const ModelParams& model, const KernelApprox& kernel, double maturity,
                           SchemeKind scheme, std::size_t steps, const StreamSpec& stream,
                           unsigned threads) {
  SimulationSetup setup;
  setup.model = model;
  setup.model.T = maturity;
  setup.kernel = kernel;
  setup.scheme = scheme;
  setup.steps = steps;
  setup.stream = stream;
  setup.threads = threads;
  return setup;
}

double vanilla_payoff(double S, double K, OptionSide side) {
  return side == OptionSide::Call ? std::max(S - K, 0.0) : std::max(K - S, 0.0);
}

class TerminalObserver final : public PathObserver {
 public:
  TerminalObserver(const std::vector<double>& strikes, OptionSide side, double growth,
                   double discount)
      : strikes_(strikes), side_(side), growth_(growth), discount_(discount) {}

  void begin_path(std::size_t, const MarketState&) override {}
  void after_step(std::size_t, const MarketState& state) override { s_ = state.S; }
  void end_path(std::span<double> payoffs) override {
    const double s = s_ * growth_;
    for (std::size_t k = 0; k < strikes_.size(); ++k) {
      payoffs[k] = discount_ * vanilla_payoff(s, strikes_[k], side_);
    }
  }

 private:
  const std::vector<double>& strikes_;
  OptionSide side_;
  double growth_;
  double discount_;
  double s_ = 0.0;
};

void fill_smile(SmileResult& out, double maturity, const std::vector<double>& log_strikes,
                const std::vector<double>& strikes, const std::vector<EstimateWithCI>& prices,
                std::size_t offset, const ModelParams& model, OptionSide side, bool with_iv) {
  out.maturity = maturity;
  const double F = model.S0 * std::exp(model.r * maturity);
  const double growth = std::exp(model.r * maturity);
  out.strikes.resize(strikes.size());
  for (std::size_t k = 0; k < strikes.size(); ++k) {
    StrikeEstimate& e = out.strikes[k];
    e.log_strike = log_strikes[k];
    e.strike = strikes[k];
    e.price = prices[offset + k];
    e.iv.value = std::numeric_limits<double>::quiet_NaN();
    e.iv.half_width = std::numeric_limits<double>::quiet_NaN();
    e.iv.replicates = e.price.replicates;
    if (!with_iv) continue;
    try {
      const double sigma = implied_vol(e.price.value * growth, F, strikes[k], maturity, side);
      const double vega = black_scholes_vega(F, strikes[k], maturity, sigma);
      e.iv.value = sigma;
      e.iv.half_width = vega > 0.0 ? e.price.half_width * growth / vega
                                   : std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      // left as NaN: the estimate is outside the no-arbitrage band
    }
  }
}

std::vector<double> strikes_for(const ModelParams& model, const std::vector<double>& log_strikes) {
  std::vector<double> strikes(log_strikes.size());
  for (std::size_t k = 0; k < strikes.size(); ++k) strikes[k] = model.S0 * std::exp(log_strikes[k]);
  return strikes;
}

}  // namespace

SmileResult price_european(const SmileRequest& req, const ModelParams& model,
                           const KernelApprox& kernel) {
  req.validate();
  const SimulationSetup setup =
      make_setup(model, kernel, req.maturity, req.scheme, req.steps, req.stream, req.threads);
  const std::vector<double> strikes = strikes_for(model, req.log_strikes);
  const double growth = std::exp(model.r * req.maturity);
  const double discount = 1.0 / growth;
  const SimulationResult sim = simulate(setup, strikes.size(), [&] {
    return std::make_unique<TerminalObserver>(strikes, req.side, growth, discount);
  });
  SmileResult out;
  fill_smile(out, req.maturity, req.log_strikes, strikes, summarize(sim.replicates), 0, model,
             req.side, true);
  out.counters = sim.counters;
  out.seconds = sim.seconds;
  return out;
}

SurfaceRequest SurfaceRequest::uniform(std::size_t maturity_count, double horizon) {
  SurfaceRequest req;
  const std::vector<double> base = standard_log_strikes();
  for (std::size_t i = 1; i <= maturity_count; ++i) {
    const double T = horizon * static_cast<double>(i) / static_cast<double>(maturity_count);
    req.maturities.push_back(T);
    std::vector<double> k(base);
    for (double& x : k) x *= std::sqrt(T);
    req.log_strikes.push_back(std::move(k));
  }
  return req;
}

void SurfaceRequest::validate() const {
  if (maturities.empty()) throw ConfigError("surface: no maturities given");
  if (log_strikes.size() != maturities.size()) {
    throw ConfigError("surface: one log-strike grid per maturity is required");
  }
  if (steps == 0) throw ConfigError("surface: at least one time step is required");
  for (std::size_t i = 0; i < maturities.size(); ++i) {
    if (!(maturities[i] > 0.0) || (i > 0 && !(maturities[i] > maturities[i - 1]))) {
      throw ConfigError("surface: maturities must be positive and strictly increasing");
    }
    if (log_strikes[i].empty()) throw ConfigError("surface: empty log-strike grid");
  }
  observation_steps();
}

std::vector<std::size_t> SurfaceRequest::observation_steps() const {
  const double horizon = maturities.back();
  std::vector<std::size_t> out;
  for (double T : maturities) {
    const double exact = T / horizon * static_cast<double>(steps);
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9 * static_cast<double>(steps) || rounded < 1.0) {
      std::ostringstream msg;
      msg << "surface: maturity " << T << " does not fall on the " << steps
          << "-step grid (choose M divisible by the number of maturities)";
      throw ConfigError(msg.str());
    }
    out.push_back(static_cast<std::size_t>(rounded));
  }
  return out;
}

namespace {

class SurfaceObserver final : public PathObserver {
 public:
  SurfaceObserver(const std::vector<std::size_t>& obs, const std::vector<std::vector<double>>& K,
                  const std::vector<double>& growth, OptionSide side)
      : obs_(obs), strikes_(K), growth_(growth), side_(side), s_(obs.size()) {}

  void begin_path(std::size_t, const MarketState&) override { next_ = 0; }
  void after_step(std::size_t step, const MarketState& state) override {
    if (next_ < obs_.size() && step == obs_[next_]) s_[next_++] = state.S;
  }
  void end_path(std::span<double> payoffs) override {
    std::size_t col = 0;
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      const double s = s_[i] * growth_[i];
      for (double K : strikes_[i]) payoffs[col++] = vanilla_payoff(s, K, side_) / growth_[i];
    }
  }

 private:
  const std::vector<std::size_t>& obs_;
  const std::vector<std::vector<double>>& strikes_;
  const std::vector<double>& growth_;
  OptionSide side_;
  std::vector<double> s_;
  std::size_t next_ = 0;
};

}  // namespace

SurfaceResult price_surface(const SurfaceRequest& req, const ModelParams& model,
                            const KernelApprox& kernel) {
  req.validate();
  const std::vector<std::size_t> obs = req.observation_steps();
  const SimulationSetup setup = make_setup(model, kernel, req.maturities.back(), req.scheme,
                                           req.steps, req.stream, req.threads);
  std::vector<std::vector<double>> strikes;
  std::vector<double> growth;
  std::size_t columns = 0;
  for (std::size_t i = 0; i < req.maturities.size(); ++i) {
    strikes.push_back(strikes_for(model, req.log_strikes[i]));
    growth.push_back(std::exp(model.r * req.maturities[i]));
    columns += strikes.back().size();
  }
  const SimulationResult sim = simulate(setup, columns, [&] {
    return std::make_unique<SurfaceObserver>(obs, strikes, growth, req.side);
  });
  const std::vector<EstimateWithCI> prices = summarize(sim.replicates);
  SurfaceResult out;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < req.maturities.size(); ++i) {
    SmileResult smile;
    fill_smile(smile, req.maturities[i], req.log_strikes[i], strikes[i], prices, offset, model,
               req.side, true);
    offset += strikes[i].size();
    out.smiles.push_back(std::move(smile));
  }
  out.counters = sim.counters;
  out.seconds = sim.seconds;
  return out;
}

namespace {

class AsianObserver final : public PathObserver {
 public:
  AsianObserver(const std::vector<double>& strikes, std::size_t steps, double h, double r,
                double discount)
      : strikes_(strikes), steps_(steps), h_(h), r_(r), discount_(discount) {}

  void begin_path(std::size_t, const MarketState& state) override {
    acc_ = 0.5 * std::log(state.S);
  }
  void after_step(std::size_t step, const MarketState& state) override {
    const double log_s = std::log(state.S) + r_ * h_ * static_cast<double>(step);
    acc_ += step == steps_ ? 0.5 * log_s : log_s;
  }
  void end_path(std::span<double> payoffs) override {
    const double G = std::exp(acc_ / static_cast<double>(steps_));
    for (std::size_t k = 0; k < strikes_.size(); ++k) {
      payoffs[k] = discount_ * std::max(G - strikes_[k], 0.0);
    }
  }

 private:
  const std::vector<double>& strikes_;
  std::size_t steps_;
  double h_;
  double r_;
  double discount_;
  double acc_ = 0.0;
};

}  // namespace

SmileResult price_geometric_asian(const AsianRequest& req, const ModelParams& model,
                                  const KernelApprox& kernel) {
  if (!(req.maturity > 0.0)) throw ConfigError("asian: maturity must be positive");
  if (req.steps == 0) throw ConfigError("asian: at least one time step is required");
  if (req.log_strikes.empty()) throw ConfigError("asian: log-strike grid is empty");
  const SimulationSetup setup =
      make_setup(model, kernel, req.maturity, req.scheme, req.steps, req.stream, req.threads);
  const std::vector<double> strikes = strikes_for(model, req.log_strikes);
  const double h = setup.step_size();
  const double discount = std::exp(-model.r * req.maturity);
  const SimulationResult sim = simulate(setup, strikes.size(), [&] {
    return std::make_unique<AsianObserver>(strikes, req.steps, h, model.r, discount);
  });
  SmileResult out;
  fill_smile(out, req.maturity, req.log_strikes, strikes, summarize(sim.replicates), 0, model,
             OptionSide::Call, false);
  out.counters = sim.counters;
  out.seconds = sim.seconds;
  return out;
}

namespace {

void enumerate(std::size_t var, std::size_t vars, int budget, std::vector<int>& current,
               std::vector<std::vector<int>>& out) {
  if (var == vars) {
    if (std::any_of(current.begin(), current.end(), [](int e) { return e > 0; })) {
      out.push_back(current);
    }
    return;
  }
  const int weight = var == 0 ? 1 : (var == 1 ? 2 : 3);
  for (int e = 0; e * weight <= budget; ++e) {
    current[var] = e;
    enumerate(var + 1, vars, budget - e * weight, current, out);
  }
  current[var] = 0;
}

}  // namespace

FeatureBasis::FeatureBasis(std::size_t factors, int degree) : factors_(factors), degree_(degree) {
  if (factors == 0) throw DomainError("FeatureBasis: at least one factor is required");
  if (degree < 0) throw DomainError("FeatureBasis: degree must be non-negative");
  std::vector<int> current(factors + 1, 0);
  enumerate(0, factors + 1, degree, current, exponents_);
  // Order by total weighted degree so low-order terms come first.
  auto weighted = [](const std::vector<int>& e) {
    int w = 0;
    for (std::size_t i = 0; i < e.size(); ++i) w += e[i] * (i == 0 ? 1 : (i == 1 ? 2 : 3));
    return w;
  };
  std::stable_sort(exponents_.begin(), exponents_.end(),
                   [&](const auto& a, const auto& b) { return weighted(a) < weighted(b); });
}

void FeatureBasis::evaluate(std::span<const double> vars, std::span<double> out) const {
  const std::size_t nv = variables();
  const std::size_t np = static_cast<std::size_t>(degree_) + 1;
  std::array<double, (kMaxFactors + 1) * 16> stack;
  std::vector<double> heap;
  double* pw = stack.data();
  if (nv * np > stack.size()) {
    heap.resize(nv * np);
    pw = heap.data();
  }
  for (std::size_t v = 0; v < nv; ++v) {
    pw[v * np] = 1.0;
    for (std::size_t e = 1; e < np; ++e) pw[v * np + e] = pw[v * np + e - 1] * vars[v];
  }
  for (std::size_t f = 0; f < exponents_.size(); ++f) {
    double acc = 1.0;
    const auto& ex = exponents_[f];
    for (std::size_t v = 0; v < nv; ++v) {
      if (ex[v] > 0) acc *= pw[v * np + static_cast<std::size_t>(ex[v])];
    }
    out[f] = acc;
  }
}

std::size_t feature_count(std::size_t factors, int degree) {
  return FeatureBasis(factors, degree).size();
}

void bermudan_variables(double S, std::span<const double> V, double K, const KernelApprox& kernel,
                        double V0, std::span<double> out) {
  const std::size_t n = kernel.size();
  out[0] = (S - K) / K;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += kernel.weights[i] * V[i];
  out[1] = total - V0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    out[2 + i] = kernel.weights[i] * (V[i] - kernel.v0split[i]);
  }
}

}  // namespace rhsim
