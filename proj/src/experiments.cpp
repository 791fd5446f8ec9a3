#include "rhsim/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rhsim/errors.hpp"

#ifndef RHSIM_GIT_DESCRIBE
#define RHSIM_GIT_DESCRIBE "unknown"
#endif

namespace rhsim {

std::vector<RateEstimate> estimate_rate(std::span<const ErrorPoint> errors) {
  if (errors.size() < 2) throw ConfigError("estimate_rate: at least two errors are required");
  std::vector<RateEstimate> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const ErrorPoint& a = errors[i];
    const ErrorPoint& b = errors[i + 1];
    if (b.steps != 2 * a.steps) {
      std::ostringstream msg;
      msg << "estimate_rate: step counts " << a.steps << " and " << b.steps << " do not double";
      throw ConfigError(msg.str());
    }
    RateEstimate r;
    r.steps = a.steps;
    r.rate = std::log2(a.error / b.error);
    r.half_width = (a.half_width / a.error + b.half_width / b.error) / std::log(2.0);
    out.push_back(r);
  }
  return out;
}

std::vector<double> fourier_smile(const ModelParams& model, const KernelApprox& kernel,
                                  double maturity, std::span<const double> log_strikes) {
  const HestonEquivalent h = heston_equivalent(model, kernel);
  const double F = model.S0 * std::exp(model.r * maturity);
  std::vector<double> iv;
  for (double k : log_strikes) {
    const double K = model.S0 * std::exp(k);
    const double call = heston_call_fourier(h, K, maturity, model.r);
    iv.push_back(implied_vol(call * std::exp(model.r * maturity), F, K, maturity));
  }
  return iv;
}

namespace {

ErrorPoint max_relative(const SmileResult& est, std::span<const double> ref,
                        std::span<const double> ref_hw, bool use_iv) {
  if (ref.size() != est.strikes.size()) {
    throw DomainError("error measure: estimate and reference grids differ");
  }
  ErrorPoint e;
  e.error = -1.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const EstimateWithCI& v = use_iv ? est.strikes[k].iv : est.strikes[k].price;
    double err = std::abs(v.value - ref[k]) / std::abs(ref[k]);
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
    if (err > e.error) {
      e.error = err;
      const double hw2 = ref_hw.empty() ? 0.0 : ref_hw[k] * ref_hw[k];
      e.half_width = std::sqrt(v.half_width * v.half_width + hw2) / std::abs(ref[k]);
    }
  }
  return e;
}

std::vector<double> column(const SmileResult& s, bool use_iv, bool half_width) {
  std::vector<double> out;
  for (const auto& k : s.strikes) {
    const EstimateWithCI& v = use_iv ? k.iv : k.price;
    out.push_back(half_width ? v.half_width : v.value);
  }
  return out;
}

}  // namespace

ErrorPoint smile_error(const SmileResult& est, std::span<const double> ref_iv) {
  return max_relative(est, ref_iv, {}, true);
}

ErrorPoint smile_error(const SmileResult& est, const SmileResult& ref) {
  const auto v = column(ref, true, false);
  const auto hw = column(ref, true, true);
  return max_relative(est, v, hw, true);
}

ErrorPoint price_error(const SmileResult& est, const SmileResult& ref) {
  const auto v = column(ref, false, false);
  const auto hw = column(ref, false, true);
  return max_relative(est, v, hw, false);
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct CsvWriter {
  std::ostringstream body;

  template <class... Args>
  void row(const Args&... cells) {
    bool first = true;
    auto put = [&](const auto& c) {
      if (!first) body << ',';
      first = false;
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(c)>>) {
        body << num(c);
      } else {
        body << c;
      }
    };
    (put(cells), ...);
    body << '\n';
  }
};

struct Timing {
  std::size_t steps;
  double seconds;
};

nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  j["kind"] = to_string(c.kind);
  j["scheme"] = to_string(c.scheme);
  j["steps"] = c.steps;
  j["model"] = {{"lambda", c.model.lambda}, {"nu", c.model.nu}, {"theta", c.model.theta},
                {"V0", c.model.V0},         {"rho", c.model.rho}, {"H", c.model.H},
                {"S0", c.model.S0},         {"r", c.model.r},   {"T", c.model.T}};
  j["kernel"] = {{"preset", c.kernel.preset},
                 {"nodes", c.kernel.nodes},
                 {"weights", c.kernel.weights},
                 {"v0split", c.kernel.v0split}};
  j["rng"] = {{"kind", to_string(c.stream.kind)},
              {"shifts", c.stream.shifts},
              {"points_per_shift", c.stream.points_per_shift},
              {"seed", c.stream.seed}};
  j["options"] = {{"side", to_string(c.side)},   {"log_strikes", c.log_strikes},
                  {"maturities", c.maturities},  {"strike", c.strike},
                  {"exercise_dates", c.exercise_dates}, {"degree", c.degree}};
  j["convergence"] = {
      {"product", c.product == ConvergenceProduct::Smile ? "smile" : "asian"},
      {"reference", c.reference == ConvergenceReference::Fourier ? "fourier" : "self"},
      {"reference_steps", c.reference_steps}};
  j["kernel_presets"] = c.kernel_presets;
  j["threads"] = c.threads;
  return j;
}

void say(const RunOptions& opt, const std::string& msg) {
  if (!opt.quiet) std::cerr << msg << '\n';
}

std::vector<double> log_strikes_of(const RunConfig& c) {
  return c.log_strikes.empty() ? standard_log_strikes() : c.log_strikes;
}

SmileRequest smile_request(const RunConfig& c, std::size_t M) {
  SmileRequest req;
  req.maturity = c.model.T;
  req.log_strikes = log_strikes_of(c);
  req.side = c.side;
  req.scheme = c.scheme;
  req.steps = M;
  req.stream = c.stream;
  req.threads = c.threads;
  return req;
}

AsianRequest asian_request(const RunConfig& c, std::size_t M) {
  AsianRequest req;
  req.maturity = c.model.T;
  req.log_strikes = log_strikes_of(c);
  req.scheme = c.scheme;
  req.steps = M;
  req.stream = c.stream;
  req.threads = c.threads;
  return req;
}

const char* kCommonHeader = "experiment,scheme,N,M,seed";

void write_smile_rows(CsvWriter& csv, const RunConfig& c, std::size_t N, std::size_t M,
                      const SmileResult& s) {
  for (const auto& k : s.strikes) {
    csv.row(to_string(c.kind), to_string(c.scheme), N, M, c.stream.seed, s.maturity, k.log_strike,
            k.strike, k.price.value, k.price.half_width, k.iv.value, k.iv.half_width);
  }
}

}  // namespace

RunOutputs run_experiment(const RunConfig& config_in, const RunOptions& opt) {
  RunConfig c = config_in;
  if (opt.has_seed) c.stream.seed = opt.seed;
  if (opt.has_threads) c.threads = opt.threads;
  if (opt.has_out) c.out_dir = opt.out_dir;
  c.validate();

  KernelApprox kernel;
  try {
    kernel = c.kernel.build(c.model.V0);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  const std::size_t N = kernel.size();
  CsvWriter csv;
  std::vector<Timing> timings;
  std::uint64_t clamps = 0;
  nlohmann::json extra = nlohmann::json::object();

  switch (c.kind) {
    case ExperimentKind::Smile: {
      csv.row(kCommonHeader, "maturity,log_strike,strike,price,price_ci,iv,iv_ci");
      for (std::size_t M : c.steps) {
        say(opt, "smile: M=" + std::to_string(M));
        const SmileResult s = price_european(smile_request(c, M), c.model, kernel);
        write_smile_rows(csv, c, N, M, s);
        timings.push_back({M, s.seconds});
        clamps += s.counters.clamp_events;
      }
      break;
    }
    case ExperimentKind::Surface: {
      csv.row(kCommonHeader, "maturity,log_strike,strike,price,price_ci,iv,iv_ci");
      for (std::size_t M : c.steps) {
        say(opt, "surface: M=" + std::to_string(M));
        SurfaceRequest req = SurfaceRequest::uniform(c.maturities, c.model.T);
        if (!c.log_strikes.empty()) {
          for (std::size_t i = 0; i < req.maturities.size(); ++i) {
            req.log_strikes[i] = c.log_strikes;
            for (double& k : req.log_strikes[i]) k *= std::sqrt(req.maturities[i]);
          }
        }
        req.side = c.side;
        req.scheme = c.scheme;
        req.steps = M;
        req.stream = c.stream;
        req.threads = c.threads;
        const SurfaceResult s = price_surface(req, c.model, kernel);
        for (const auto& smile : s.smiles) write_smile_rows(csv, c, N, M, smile);
        timings.push_back({M, s.seconds});
        clamps += s.counters.clamp_events;
      }
      break;
    }
    case ExperimentKind::Asian: {
      csv.row(kCommonHeader, "maturity,log_strike,strike,price,price_ci");
      for (std::size_t M : c.steps) {
        say(opt, "asian: M=" + std::to_string(M));
        const SmileResult s = price_geometric_asian(asian_request(c, M), c.model, kernel);
        for (const auto& k : s.strikes) {
          csv.row(to_string(c.kind), to_string(c.scheme), N, M, c.stream.seed, s.maturity,
                  k.log_strike, k.strike, k.price.value, k.price.half_width);
        }
        timings.push_back({M, s.seconds});
        clamps += s.counters.clamp_events;
      }
      break;
    }
    case ExperimentKind::Bermudan: {
      csv.row(kCommonHeader,
              "strike,exercise_dates,degree,features,price,price_ci,european,european_ci,"
              "in_sample,in_sample_ci");
      for (std::size_t M : c.steps) {
        say(opt, "bermudan: M=" + std::to_string(M));
        BermudanRequest req;
        req.strike = c.strike;
        req.maturity = c.model.T;
        req.exercise_dates = c.exercise_dates;
        req.scheme = c.scheme;
        req.steps = M;
        req.degree = c.degree;
        req.stream = c.stream;
        req.threads = c.threads;
        const BermudanResult b = price_bermudan_put(req, c.model, kernel);
        csv.row(to_string(c.kind), to_string(c.scheme), N, M, c.stream.seed, c.strike,
                c.exercise_dates, c.degree, b.features, b.price.value, b.price.half_width,
                b.european.value, b.european.half_width, b.in_sample.value,
                b.in_sample.half_width);
        timings.push_back({M, b.seconds});
        clamps += b.counters.clamp_events;
      }
      break;
    }
    case ExperimentKind::Convergence: {
      const bool smile = c.product == ConvergenceProduct::Smile;
      if (!smile && c.reference == ConvergenceReference::Fourier) {
        throw ConfigError("convergence: Asian options need reference = self");
      }
      if (c.reference == ConvergenceReference::Fourier && N != 1) {
        throw ConfigError("convergence: the Fourier reference needs a one-factor kernel");
      }
      auto run_one = [&](std::size_t M) {
        say(opt, "convergence: M=" + std::to_string(M));
        SmileResult s = smile ? price_european(smile_request(c, M), c.model, kernel)
                              : price_geometric_asian(asian_request(c, M), c.model, kernel);
        timings.push_back({M, s.seconds});
        clamps += s.counters.clamp_events;
        return s;
      };
      std::vector<SmileResult> runs;
      for (std::size_t M : c.steps) runs.push_back(run_one(M));
      std::vector<ErrorPoint> errors;
      if (c.reference == ConvergenceReference::Fourier) {
        const auto ref = fourier_smile(c.model, kernel, c.model.T, log_strikes_of(c));
        extra["reference_iv"] = ref;
        for (std::size_t i = 0; i < runs.size(); ++i) {
          errors.push_back(smile_error(runs[i], ref));
          errors.back().steps = c.steps[i];
        }
      } else {
        const SmileResult ref = run_one(c.reference_steps);
        for (std::size_t i = 0; i < runs.size(); ++i) {
          errors.push_back(smile ? smile_error(runs[i], ref) : price_error(runs[i], ref));
          errors.back().steps = c.steps[i];
        }
      }
      const auto rates = estimate_rate(errors);
      csv.row("experiment,product,reference,scheme,N,M,seed,error,error_ci,rate,rate_ci");
      for (std::size_t i = 0; i < errors.size(); ++i) {
        const std::string rate = i < rates.size() ? num(rates[i].rate) : "";
        const std::string rate_ci = i < rates.size() ? num(rates[i].half_width) : "";
        csv.row(to_string(c.kind), smile ? "smile" : "asian",
                c.reference == ConvergenceReference::Fourier ? "fourier" : "self",
                to_string(c.scheme), N, errors[i].steps, c.stream.seed, errors[i].error,
                errors[i].half_width, rate, rate_ci);
      }
      break;
    }
    case ExperimentKind::KernelError: {
      csv.row("experiment,kernel,H,T,N,l1_error");
      std::vector<KernelSpec> specs{c.kernel};
      for (const auto& key : c.kernel_presets) specs.push_back(KernelSpec{key, {}, {}, {}});
      for (const auto& spec : specs) {
        const auto start = std::chrono::steady_clock::now();
        const KernelApprox k = spec.build(c.model.V0);
        const double err = l1_error(k, c.model.H, c.model.T);
        csv.row(to_string(c.kind), spec.describe(), c.model.H, c.model.T, k.size(), err);
        timings.push_back(
            {0, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
      }
      break;
    }
  }

  std::filesystem::create_directories(c.out_dir);
  const std::string stem = (std::filesystem::path(c.out_dir) / to_string(c.kind)).string();
  RunOutputs out;
  out.csv_path = stem + ".csv";
  out.json_path = stem + ".json";
  out.clamp_events = clamps;
  {
    std::ofstream f(out.csv_path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + out.csv_path + "'");
    f << csv.body.str();
  }
  nlohmann::json meta;
  meta["schema_version"] = 1;
  meta["experiment"] = to_string(c.kind);
  meta["config"] = config_json(c);
  meta["seed"] = c.stream.seed;
  meta["git_describe"] = RHSIM_GIT_DESCRIBE;
  meta["clamp_events"] = clamps;
  nlohmann::json times = nlohmann::json::array();
  for (const auto& t : timings) times.push_back({{"M", t.steps}, {"seconds", t.seconds}});
  meta["wall_times"] = times;
  meta["extra"] = extra;
  {
    std::ofstream f(out.json_path);
    if (!f) throw ConfigError("cannot write '" + out.json_path + "'");
    f << meta.dump(2) << '\n';
  }
  say(opt, "wrote " + out.csv_path + " and " + out.json_path);
  return out;
}

int run_and_report(const RunConfig& config, const RunOptions& options) {
  try {
    run_experiment(config, options);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const LookupError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace rhsim
