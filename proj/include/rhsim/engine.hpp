#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "rhsim/kernel.hpp"
#include "rhsim/model.hpp"
#include "rhsim/pathscheme.hpp"
#include "rhsim/randstream.hpp"

namespace rhsim {

// Everything needed to simulate a batch of paths on a uniform time grid.
struct SimulationSetup {
  ModelParams model;
  KernelApprox kernel;
  SchemeKind scheme = SchemeKind::Weak;
  std::size_t steps = 1;  // M
  StreamSpec stream;      // dimension is derived from the scheme layout
  unsigned threads = 1;

  double step_size() const { return model.T / static_cast<double>(steps); }
  std::size_t uniforms_per_step() const;
  // `stream` with dimension = uniforms_per_step() * steps.
  StreamSpec stream_spec() const;
};

// Per-path callbacks. One observer instance is created per worker and reused
// across that worker's paths; begin_path must reset any per-path state.
class PathObserver {
 public:
  virtual ~PathObserver() = default;
  virtual void begin_path(std::size_t index, const MarketState& state) = 0;
  // Called after step `step` (1-based), i.e. at time step * h.
  virtual void after_step(std::size_t step, const MarketState& state) = 0;
  virtual void end_path(std::span<double> payoffs) = 0;
};

using ObserverFactory = std::function<std::unique_ptr<PathObserver>()>;

// Payoff sums per replicate (shift); sums[r][p] over the paths of replicate r.
struct ReplicateSums {
  std::vector<std::vector<double>> sums;
  std::vector<std::size_t> counts;
};

struct SimulationResult {
  ReplicateSums replicates;
  StepCounters counters;
  double seconds = 0.0;
};

// Paths are processed in fixed-size chunks that never straddle a replicate,
// and chunk partial sums are reduced in chunk order, so results are bitwise
// independent of the thread count.
inline constexpr std::size_t kChunkPaths = 512;

SimulationResult simulate(const SimulationSetup& setup, std::size_t payoff_count,
                          const ObserverFactory& factory, std::size_t begin, std::size_t end);
SimulationResult simulate(const SimulationSetup& setup, std::size_t payoff_count,
                          const ObserverFactory& factory);

// Mean with a 95% Student-t interval over replicate estimates.
struct EstimateWithCI {
  double value = 0.0;
  double half_width = 0.0;
  std::size_t replicates = 0;
};

// 97.5% quantile of Student's t with `dof` degrees of freedom.
double student_t_975(std::size_t dof);

EstimateWithCI estimate_from_replicates(std::span<const double> replicate_means);
// One estimate per payoff column, from the per-replicate means.
std::vector<EstimateWithCI> summarize(const ReplicateSums& sums);
// Per-replicate means of one payoff column.
std::vector<double> replicate_means(const ReplicateSums& sums, std::size_t payoff);

}  // namespace rhsim
