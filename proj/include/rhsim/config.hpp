#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "rhsim/kernel.hpp"
#include "rhsim/model.hpp"
#include "rhsim/randstream.hpp"
#include "rhsim/reference.hpp"

namespace rhsim {

enum class ExperimentKind { Smile, Surface, Asian, Bermudan, Convergence, KernelError };

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

// Either a preset key or explicit nodes/weights (with an optional split).
struct KernelSpec {
  std::string preset;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> v0split;

  KernelApprox build(double V0) const;
  std::string describe() const;
};

enum class ConvergenceProduct { Smile, Asian };
enum class ConvergenceReference { Fourier, Self };

struct RunConfig {
  ExperimentKind kind = ExperimentKind::Smile;
  ModelParams model;
  KernelSpec kernel{"H0.1/T1/N2", {}, {}, {}};
  SchemeKind scheme = SchemeKind::Weak;
  std::vector<std::size_t> steps{32};
  StreamSpec stream{StreamKind::SobolShifted, 1, 25, 1u << 16, 42};
  unsigned threads = 1;
  std::string out_dir = "out";

  // smile, surface, asian
  OptionSide side = OptionSide::Call;
  std::vector<double> log_strikes;  // empty: standard grid
  std::size_t maturities = 16;      // surface: T_i = i T / n

  // bermudan
  double strike = 105.0;
  std::size_t exercise_dates = 4;
  int degree = 6;

  // convergence
  ConvergenceProduct product = ConvergenceProduct::Smile;
  ConvergenceReference reference = ConvergenceReference::Fourier;
  std::size_t reference_steps = 2048;

  // kernel-error: presets evaluated in addition to [kernel]
  std::vector<std::string> kernel_presets;

  void validate() const;
};

// Flat INI-style text: [section] headers, key = value lines, '#' or ';'
// comments. Errors carry "<source>:<line>: " prefixes.
RunConfig parse_config(std::istream& in, const std::string& source);
RunConfig load_config(const std::string& path);

}  // namespace rhsim
