#include "rhsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rhsim/errors.hpp"

namespace rhsim {

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Smile: return "smile";
    case ExperimentKind::Surface: return "surface";
    case ExperimentKind::Asian: return "asian";
    case ExperimentKind::Bermudan: return "bermudan";
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::KernelError: return "kernel-error";
  }
  return "unknown";
}

ExperimentKind experiment_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::Smile, ExperimentKind::Surface, ExperimentKind::Asian,
                 ExperimentKind::Bermudan, ExperimentKind::Convergence,
                 ExperimentKind::KernelError}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown experiment '" + name +
                    "' (expected smile, surface, asian, bermudan, convergence or kernel-error)");
}

KernelApprox KernelSpec::build(double V0) const {
  if (!preset.empty()) {
    if (!nodes.empty() || !weights.empty()) {
      throw ConfigError("kernel: give either a preset or explicit nodes/weights, not both");
    }
    KernelApprox k = rhsim::preset(preset, V0);
    if (!v0split.empty()) {
      k.v0split = v0split;
      k.validate(V0);
    }
    return k;
  }
  if (nodes.empty()) throw ConfigError("kernel: no preset and no nodes given");
  KernelApprox k = make_kernel(nodes, weights, V0);
  if (!v0split.empty()) {
    k.v0split = v0split;
    k.validate(V0);
  }
  return k;
}

std::string KernelSpec::describe() const {
  if (!preset.empty()) return preset;
  std::ostringstream s;
  s << "custom/N" << nodes.size();
  return s.str();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("'" + s + "' is not a finite number");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("'" + s + "' is not a non-negative integer");
  }
  return v;
}

// Accepts an integer, or 2^k, or a*2^k (e.g. 25*2^16).
std::uint64_t parse_count(const std::string& raw) {
  std::string s;
  for (char c : raw) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  std::uint64_t factor = 1;
  const auto star = s.find('*');
  if (star != std::string::npos) {
    factor = parse_uint(s.substr(0, star));
    s = s.substr(star + 1);
  }
  const auto caret = s.find('^');
  if (caret == std::string::npos) return factor * parse_uint(s);
  const std::uint64_t base = parse_uint(s.substr(0, caret));
  const std::uint64_t exp = parse_uint(s.substr(caret + 1));
  std::uint64_t v = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (v > (std::uint64_t{1} << 62) / std::max<std::uint64_t>(base, 1)) {
      throw ConfigError("'" + raw + "' overflows");
    }
    v *= base;
  }
  return factor * v;
}

std::vector<double> parse_doubles(const std::string& s) {
  // "linspace(a, b, n)" or a comma-separated list.
  const std::string t = trim(s);
  if (t.rfind("linspace(", 0) == 0 && t.back() == ')') {
    const auto parts = split_list(t.substr(9, t.size() - 10));
    if (parts.size() != 3) throw ConfigError("linspace needs (start, stop, count)");
    const double a = parse_double(parts[0]);
    const double b = parse_double(parts[1]);
    const std::uint64_t n = parse_uint(parts[2]);
    if (n == 0) throw ConfigError("linspace count must be positive");
    std::vector<double> out(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split_list(t)) out.push_back(parse_double(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.kind", [](RunConfig& c, const std::string& v) { c.kind = experiment_from_string(v); }},
      {"run.scheme",
       [](RunConfig& c, const std::string& v) { c.scheme = scheme_from_string(v.c_str()); }},
      {"run.steps",
       [](RunConfig& c, const std::string& v) {
         c.steps.clear();
         for (const auto& item : split_list(v)) c.steps.push_back(parse_count(item));
         if (c.steps.empty()) throw ConfigError("empty step list");
       }},
      {"run.threads",
       [](RunConfig& c, const std::string& v) { c.threads = static_cast<unsigned>(parse_uint(v)); }},
      {"run.out", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},

      {"model.lambda", [](RunConfig& c, const std::string& v) { c.model.lambda = parse_double(v); }},
      {"model.nu", [](RunConfig& c, const std::string& v) { c.model.nu = parse_double(v); }},
      {"model.theta", [](RunConfig& c, const std::string& v) { c.model.theta = parse_double(v); }},
      {"model.V0", [](RunConfig& c, const std::string& v) { c.model.V0 = parse_double(v); }},
      {"model.rho", [](RunConfig& c, const std::string& v) { c.model.rho = parse_double(v); }},
      {"model.H", [](RunConfig& c, const std::string& v) { c.model.H = parse_double(v); }},
      {"model.S0", [](RunConfig& c, const std::string& v) { c.model.S0 = parse_double(v); }},
      {"model.r", [](RunConfig& c, const std::string& v) { c.model.r = parse_double(v); }},
      {"model.T", [](RunConfig& c, const std::string& v) { c.model.T = parse_double(v); }},

      {"kernel.preset", [](RunConfig& c, const std::string& v) { c.kernel.preset = v; }},
      {"kernel.nodes",
       [](RunConfig& c, const std::string& v) {
         c.kernel.preset.clear();
         c.kernel.nodes = parse_doubles(v);
       }},
      {"kernel.weights",
       [](RunConfig& c, const std::string& v) {
         c.kernel.preset.clear();
         c.kernel.weights = parse_doubles(v);
       }},
      {"kernel.v0split",
       [](RunConfig& c, const std::string& v) { c.kernel.v0split = parse_doubles(v); }},

      {"rng.kind", [](RunConfig& c, const std::string& v) { c.stream.kind = stream_kind_from_string(v); }},
      {"rng.shifts", [](RunConfig& c, const std::string& v) { c.stream.shifts = parse_count(v); }},
      {"rng.points_per_shift",
       [](RunConfig& c, const std::string& v) { c.stream.points_per_shift = parse_count(v); }},
      {"rng.seed", [](RunConfig& c, const std::string& v) { c.stream.seed = parse_uint(v); }},

      {"options.side", [](RunConfig& c, const std::string& v) { c.side = option_side_from_string(v); }},
      {"options.log_strikes",
       [](RunConfig& c, const std::string& v) { c.log_strikes = parse_doubles(v); }},
      {"options.maturities", [](RunConfig& c, const std::string& v) { c.maturities = parse_uint(v); }},
      {"options.strike", [](RunConfig& c, const std::string& v) { c.strike = parse_double(v); }},
      {"options.exercise_dates",
       [](RunConfig& c, const std::string& v) { c.exercise_dates = parse_uint(v); }},
      {"options.degree",
       [](RunConfig& c, const std::string& v) { c.degree = static_cast<int>(parse_uint(v)); }},

      {"convergence.product",
       [](RunConfig& c, const std::string& v) {
         if (v == "smile") {
           c.product = ConvergenceProduct::Smile;
         } else if (v == "asian") {
           c.product = ConvergenceProduct::Asian;
         } else {
           throw ConfigError("product must be smile or asian");
         }
       }},
      {"convergence.reference",
       [](RunConfig& c, const std::string& v) {
         if (v == "fourier") {
           c.reference = ConvergenceReference::Fourier;
         } else if (v == "self") {
           c.reference = ConvergenceReference::Self;
         } else {
           throw ConfigError("reference must be fourier or self");
         }
       }},
      {"convergence.reference_steps",
       [](RunConfig& c, const std::string& v) { c.reference_steps = parse_count(v); }},

      {"kernel-error.presets",
       [](RunConfig& c, const std::string& v) { c.kernel_presets = split_list(v); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (steps.empty()) throw ConfigError("run.steps: at least one step count is required");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] == 0) throw ConfigError("run.steps: entries must be at least 1");
    if (i > 0 && steps[i] <= steps[i - 1]) {
      throw ConfigError("run.steps: entries must be sorted ascending without repeats");
    }
  }
  if (stream.shifts == 0 || stream.points_per_shift == 0) {
    throw ConfigError("rng: shifts and points_per_shift must be positive");
  }
  if (!kernel.preset.empty()) {
    // Keys look like H0.1/T1/N2; the Hurst index must agree with the model.
    const auto slash = kernel.preset.find('/');
    if (kernel.preset.size() > 1 && kernel.preset[0] == 'H' && slash != std::string::npos) {
      double H = 0.0;
      const char* b = kernel.preset.data() + 1;
      const auto res = std::from_chars(b, kernel.preset.data() + slash, H);
      if (res.ec == std::errc() && std::abs(H - model.H) > 1e-12) {
        std::ostringstream msg;
        msg << "kernel preset " << kernel.preset << " was built for H=" << H
            << " but model.H=" << model.H;
        throw ConfigError(msg.str());
      }
    }
  }
  if (kind == ExperimentKind::Surface) {
    if (maturities == 0) throw ConfigError("options.maturities must be positive");
    for (std::size_t M : steps) {
      if (M % maturities != 0) {
        std::ostringstream msg;
        msg << "run.steps: M=" << M << " is not divisible by options.maturities=" << maturities;
        throw ConfigError(msg.str());
      }
    }
  }
  if (kind == ExperimentKind::Bermudan) {
    for (std::size_t M : steps) {
      if (exercise_dates == 0 || M % exercise_dates != 0) {
        std::ostringstream msg;
        msg << "run.steps: M=" << M << " is not divisible by options.exercise_dates="
            << exercise_dates;
        throw ConfigError(msg.str());
      }
    }
    if (stream.points_per_shift % 2 != 0) {
      throw ConfigError("rng.points_per_shift must be even for bermudan runs");
    }
  }
  if (kind == ExperimentKind::Convergence) {
    if (steps.size() < 2) throw ConfigError("convergence needs at least two step counts");
    for (std::size_t i = 1; i < steps.size(); ++i) {
      if (steps[i] != 2 * steps[i - 1]) {
        throw ConfigError("convergence: run.steps must double from entry to entry");
      }
    }
    if (reference == ConvergenceReference::Self && reference_steps <= steps.back()) {
      throw ConfigError("convergence.reference_steps must exceed the largest entry of run.steps");
    }
  }
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string section;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    std::ostringstream msg;
    msg << source << ':' << lineno << ": " << what;
    throw ConfigError(msg.str());
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail("key '" + key + "' appears before any [section]");
    const auto it = setters().find(section + "." + key);
    if (it == setters().end()) fail("unknown key '" + key + "' in [" + section + "]");
    if (value.empty()) fail("empty value for '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      fail(section + "." + key + ": " + e.what());
    } catch (const std::exception& e) {
      fail(section + "." + key + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

}  // namespace rhsim
