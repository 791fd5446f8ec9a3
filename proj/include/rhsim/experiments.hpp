#pragma once

#include <span>
#include <string>
#include <vector>

#include "rhsim/config.hpp"
#include "rhsim/pricing.hpp"

namespace rhsim {

struct ErrorPoint {
  std::size_t steps = 0;
  double error = 0.0;
  double half_width = 0.0;  // 95% interval on the error
};

struct RateEstimate {
  std::size_t steps = 0;  // the coarser M of the pair (M, 2M)
  double rate = 0.0;
  double half_width = 0.0;
};

// log2(e_M / e_2M) per adjacent pair; the interval follows from the error
// intervals to first order. Requires a doubling M grid.
std::vector<RateEstimate> estimate_rate(std::span<const ErrorPoint> errors);

// Implied vols of the N=1 Fourier reference on a smile grid.
std::vector<double> fourier_smile(const ModelParams& model, const KernelApprox& kernel,
                                  double maturity, std::span<const double> log_strikes);

// Max over strikes of |iv - ref| / ref, with the interval taken at the
// maximising strike.
ErrorPoint smile_error(const SmileResult& est, std::span<const double> ref_iv);
ErrorPoint smile_error(const SmileResult& est, const SmileResult& ref);
// Same on prices (used for Asian options).
ErrorPoint price_error(const SmileResult& est, const SmileResult& ref);

struct RunOptions {
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool has_threads = false;
  unsigned threads = 1;
  bool has_out = false;
  std::string out_dir;
  bool quiet = false;
};

struct RunOutputs {
  std::string csv_path;
  std::string json_path;
  std::uint64_t clamp_events = 0;
};

// Runs one configured experiment, writing <out>/<kind>.csv and
// <out>/<kind>.json. The CSV depends only on the config and seed.
RunOutputs run_experiment(const RunConfig& config, const RunOptions& options);

// Wraps run_experiment with the CLI exit-code contract: 0 success,
// 2 configuration error, 3 numerical failure.
int run_and_report(const RunConfig& config, const RunOptions& options);

}  // namespace rhsim
