#pragma once

#include <cstddef>

namespace rhsim {

// Upper bound on the number of Markovian factors; steppers keep per-step
// scratch on the stack.
inline constexpr std::size_t kMaxFactors = 16;

// Rough Heston market parameters. Defaults are the standard parameter set
// used throughout the experiments.
struct ModelParams {
  double lambda = 0.3;  // mean reversion of the total variance
  double nu = 0.3;      // vol-of-vol
  double theta = 0.02;
  double V0 = 0.02;
  double rho = -0.7;
  double H = 0.1;  // Hurst parameter, in (-1/2, 1/2]
  double S0 = 1.0;
  double r = 0.0;  // deterministic rate, applied by compounding the martingale
  double T = 1.0;

  void validate() const;
};

enum class SchemeKind { Weak, Euler };

const char* to_string(SchemeKind kind);
SchemeKind scheme_from_string(const char* name);

}  // namespace rhsim
