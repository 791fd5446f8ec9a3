#include "rhsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include <boost/math/distributions/students_t.hpp>

#include "rhsim/errors.hpp"

namespace rhsim {

const char* to_string(SchemeKind kind) { return kind == SchemeKind::Weak ? "weak" : "euler"; }

SchemeKind scheme_from_string(const char* name) {
  const std::string s(name);
  if (s == "weak") return SchemeKind::Weak;
  if (s == "euler") return SchemeKind::Euler;
  throw ConfigError("unknown scheme '" + s + "' (expected weak or euler)");
}

void ModelParams::validate() const {
  if (!(nu >= 0.0) || !(lambda >= 0.0) || !(theta >= 0.0)) {
    throw ConfigError("model: lambda, nu and theta must be non-negative");
  }
  if (!(rho >= -1.0 && rho <= 1.0)) throw ConfigError("model: rho must lie in [-1, 1]");
  if (!(H > -0.5 && H <= 0.5)) throw ConfigError("model: H must lie in (-1/2, 1/2]");
  if (!(V0 >= 0.0)) throw ConfigError("model: V0 must be non-negative");
  if (!(S0 > 0.0)) throw ConfigError("model: S0 must be positive");
  if (!(T > 0.0)) throw ConfigError("model: T must be positive");
}

std::size_t SimulationSetup::uniforms_per_step() const {
  return scheme == SchemeKind::Weak ? WeakScheme::kUniformsPerStep
                                    : EulerScheme::kUniformsPerStep;
}

StreamSpec SimulationSetup::stream_spec() const {
  StreamSpec spec = stream;
  spec.dimension = uniforms_per_step() * steps;
  return spec;
}

namespace {

struct Chunk {
  std::size_t begin;
  std::size_t end;
  std::size_t replicate;
};

std::vector<Chunk> make_chunks(const StreamSpec& spec, std::size_t begin, std::size_t end) {
  std::vector<Chunk> chunks;
  std::size_t a = begin;
  while (a < end) {
    const std::size_t replicate = a / spec.points_per_shift;
    const std::size_t replicate_end = (replicate + 1) * spec.points_per_shift;
    const std::size_t b = std::min({a + kChunkPaths, replicate_end, end});
    chunks.push_back({a, b, replicate});
    a = b;
  }
  return chunks;
}

struct ChunkResult {
  std::vector<double> sums;
  StepCounters counters;
};

[[noreturn, gnu::cold]] void throw_non_finite(std::size_t path, double S, SchemeKind scheme) {
  std::ostringstream msg;
  msg << "engine (" << to_string(scheme) << " scheme): non-finite state or payoff on path " << path
      << " (S_T = " << S << ")";
  throw NumericalError(msg.str());
}

template <class Scheme>
void run_chunk(const Scheme& scheme, const SimulationSetup& setup, const StreamSpec& spec,
               const Chunk& chunk, PathObserver& observer, std::size_t payoff_count,
               ChunkResult& out) {
  const std::size_t per_step = Scheme::kUniformsPerStep;
  RandomStream stream(spec, chunk.begin, chunk.end);
  std::vector<double> u(spec.dimension);
  std::vector<double> payoffs(payoff_count);
  out.sums.assign(payoff_count, 0.0);
  MarketState state = initial_state(setup.model, setup.kernel);
  for (std::size_t index = chunk.begin; index < chunk.end; ++index) {
    stream.next_point(u);
    state.S = setup.model.S0;
    std::copy(setup.kernel.v0split.begin(), setup.kernel.v0split.end(), state.V.begin());
    std::fill(state.Y.begin(), state.Y.end(), 0.0);
    state.t = 0.0;
    observer.begin_path(index, state);
    for (std::size_t m = 0; m < setup.steps; ++m) {
      scheme.step(state, std::span<const double>(u.data() + m * per_step, per_step),
                  out.counters);
      observer.after_step(m + 1, state);
    }
    std::fill(payoffs.begin(), payoffs.end(), 0.0);
    observer.end_path(payoffs);
    bool finite = std::isfinite(state.S);
    for (std::size_t p = 0; p < payoff_count; ++p) {
      finite = finite && std::isfinite(payoffs[p]);
      out.sums[p] += payoffs[p];
    }
    if (!finite) throw_non_finite(index, state.S, setup.scheme);
  }
}

}  // namespace

SimulationResult simulate(const SimulationSetup& setup, std::size_t payoff_count,
                          const ObserverFactory& factory, std::size_t begin, std::size_t end) {
  const auto start = std::chrono::steady_clock::now();
  setup.model.validate();
  setup.kernel.validate(setup.model.V0);
  if (setup.steps == 0) throw ConfigError("simulation needs at least one time step");
  const StreamSpec spec = setup.stream_spec();
  spec.validate();
  if (begin > end || end > spec.total()) throw DomainError("simulate: invalid path range");

  const double h = setup.step_size();
  std::variant<WeakScheme, EulerScheme> scheme =
      setup.scheme == SchemeKind::Weak
          ? std::variant<WeakScheme, EulerScheme>(WeakScheme(setup.model, setup.kernel, h))
          : std::variant<WeakScheme, EulerScheme>(EulerScheme(setup.model, setup.kernel, h));

  const std::vector<Chunk> chunks = make_chunks(spec, begin, end);
  std::vector<ChunkResult> results(chunks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    try {
      std::unique_ptr<PathObserver> observer = factory();
      for (std::size_t c = next++; c < chunks.size(); c = next++) {
        std::visit(
            [&](const auto& s) {
              run_chunk(s, setup, spec, chunks[c], *observer, payoff_count, results[c]);
            },
            scheme);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = chunks.size();
    }
  };

  const std::size_t threads =
      std::max<std::size_t>(1, std::min<std::size_t>(setup.threads, chunks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SimulationResult result;
  const std::size_t first_rep = begin / spec.points_per_shift;
  const std::size_t last_rep = end == begin ? first_rep : (end - 1) / spec.points_per_shift + 1;
  result.replicates.sums.assign(last_rep - first_rep, std::vector<double>(payoff_count, 0.0));
  result.replicates.counts.assign(last_rep - first_rep, 0);
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const std::size_t r = chunks[c].replicate - first_rep;
    for (std::size_t p = 0; p < payoff_count; ++p) result.replicates.sums[r][p] += results[c].sums[p];
    result.replicates.counts[r] += chunks[c].end - chunks[c].begin;
    result.counters += results[c].counters;
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SimulationResult simulate(const SimulationSetup& setup, std::size_t payoff_count,
                          const ObserverFactory& factory) {
  return simulate(setup, payoff_count, factory, 0, setup.stream_spec().total());
}

double student_t_975(std::size_t dof) {
  if (dof == 0) return std::numeric_limits<double>::infinity();
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

EstimateWithCI estimate_from_replicates(std::span<const double> means) {
  EstimateWithCI e;
  e.replicates = means.size();
  if (means.empty()) {
    e.value = std::numeric_limits<double>::quiet_NaN();
    e.half_width = std::numeric_limits<double>::infinity();
    return e;
  }
  double sum = 0.0;
  for (double m : means) sum += m;
  e.value = sum / static_cast<double>(means.size());
  if (means.size() < 2) {
    e.half_width = std::numeric_limits<double>::infinity();
    return e;
  }
  double ss = 0.0;
  for (double m : means) ss += (m - e.value) * (m - e.value);
  const double sd = std::sqrt(ss / static_cast<double>(means.size() - 1));
  e.half_width = student_t_975(means.size() - 1) * sd / std::sqrt(static_cast<double>(means.size()));
  return e;
}

std::vector<double> replicate_means(const ReplicateSums& sums, std::size_t payoff) {
  std::vector<double> means;
  means.reserve(sums.sums.size());
  for (std::size_t r = 0; r < sums.sums.size(); ++r) {
    if (sums.counts[r] > 0) {
      means.push_back(sums.sums[r][payoff] / static_cast<double>(sums.counts[r]));
    }
  }
  return means;
}

std::vector<EstimateWithCI> summarize(const ReplicateSums& sums) {
  const std::size_t payoffs = sums.sums.empty() ? 0 : sums.sums.front().size();
  std::vector<EstimateWithCI> out;
  out.reserve(payoffs);
  for (std::size_t p = 0; p < payoffs; ++p) {
    const std::vector<double> means = replicate_means(sums, p);
    out.push_back(estimate_from_replicates(means));
  }
  return out;
}

}  // namespace rhsim
