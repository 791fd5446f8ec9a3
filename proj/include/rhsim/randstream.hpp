#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rhsim {

enum class StreamKind { Pseudo, SobolShifted };

const char* to_string(StreamKind kind);
StreamKind stream_kind_from_string(const std::string& name);

// Point set layout: `shifts` replicates of `points_per_shift` points each,
// replicate-major. For Sobol streams every replicate reuses Sobol indices
// 1..points_per_shift under its own random shift; for pseudo streams the
// replicates are independent batches.
struct StreamSpec {
  StreamKind kind = StreamKind::SobolShifted;
  std::size_t dimension = 1;
  std::size_t shifts = 1;
  std::size_t points_per_shift = 1;
  std::uint64_t seed = 0;

  std::size_t total() const { return shifts * points_per_shift; }
  void validate() const;
};

// Gray-code Sobol generator with Joe-Kuo direction numbers (up to 21201
// dimensions, 2^32 points). Produces raw 32-bit coordinates.
class SobolSequence {
 public:
  static std::size_t max_dimension();

  explicit SobolSequence(std::size_t dimension);

  std::size_t dimension() const { return dimension_; }
  // Positions the sequence so that the current point is `index`.
  void seek(std::uint64_t index);
  std::uint64_t index() const { return index_; }
  // Current point as integers; divide by 2^32 for [0, 1).
  std::span<const std::uint32_t> point() const { return point_; }
  void advance();

 private:
  std::size_t dimension_;
  std::shared_ptr<const std::vector<std::uint32_t>> directions_;  // [dim][32]
  std::vector<std::uint32_t> point_;
  std::uint64_t index_ = 0;
};

// Stateless 64-bit mixer (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// Single-consumer uniform source over a contiguous index range [begin, end)
// of a StreamSpec's point set.
class RandomStream {
 public:
  explicit RandomStream(const StreamSpec& spec);
  RandomStream(const StreamSpec& spec, std::size_t begin, std::size_t end);

  const StreamSpec& spec() const { return spec_; }
  std::size_t begin() const { return begin_; }
  std::size_t end() const { return end_; }
  // Global index of the next point.
  std::size_t position() const { return next_; }
  std::size_t remaining() const { return end_ - next_; }
  // Replicate of the next point.
  std::size_t replicate() const { return next_ / spec_.points_per_shift; }

  // Fills `out` (size = dimension) with uniforms in [0, 1). Throws
  // StreamExhausted past the end of the range.
  void next_point(std::span<double> out);

  // Shift vector of a replicate (Sobol streams).
  std::vector<double> shift_of(std::size_t replicate) const;

 private:
  void load_shift(std::size_t replicate);

  StreamSpec spec_;
  std::size_t begin_;
  std::size_t end_;
  std::size_t next_;
  std::unique_ptr<SobolSequence> sobol_;
  std::vector<double> shift_;
  std::size_t shift_replicate_ = static_cast<std::size_t>(-1);
};

// Splits the point set into `workers` contiguous, disjoint sub-streams.
std::vector<RandomStream> partition(const StreamSpec& spec, std::size_t workers);

// Standard normal quantile (Wichura AS241, relative accuracy ~1e-16).
// Throws DomainError outside (0, 1).
double inv_normal_cdf(double u);

// inv_normal_cdf with u clamped into [2^-53, 1 - 2^-53]; used on stream output.
double normal_from_uniform(double u);

}  // namespace rhsim
