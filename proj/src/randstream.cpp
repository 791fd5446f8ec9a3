#include "rhsim/randstream.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <mutex>
#include <sstream>

#include "rhsim/errors.hpp"

namespace rhsim {

namespace {

[[noreturn, gnu::noinline, gnu::cold]] void throw_exhausted(std::uint64_t points) {
  std::ostringstream msg;
  msg << "random stream exhausted after " << points << " points";
  throw StreamExhausted(msg.str());
}

[[noreturn, gnu::noinline, gnu::cold]] void throw_outside_unit(double u) {
  std::ostringstream msg;
  msg << "inv_normal_cdf: argument " << u << " outside (0, 1)";
  throw DomainError(msg.str());
}

#include "sobol_directions.inc"

constexpr int kSobolBits = 32;
constexpr double kTwoPow32Inv = 1.0 / 4294967296.0;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Direction integers v[d * 32 + k] for dimensions [0, dim).
std::vector<std::uint32_t> build_directions(std::size_t dim) {
  std::vector<std::uint32_t> v(dim * kSobolBits);
  std::size_t offset = 0;
  for (std::size_t d = 0; d < dim; ++d) {
    std::uint32_t* vd = v.data() + d * kSobolBits;
    const std::uint32_t poly = kSobolTable[offset];
    if (d == 0) {
      for (int k = 0; k < kSobolBits; ++k) vd[k] = 1u << (kSobolBits - 1 - k);
      offset += 2;
      continue;
    }
    const int degree = std::bit_width(poly) - 1;
    std::array<std::uint64_t, kSobolBits> m{};
    for (int k = 0; k < degree; ++k) m[k] = kSobolTable[offset + 1 + k];
    for (int k = degree; k < kSobolBits; ++k) {
      std::uint64_t next = m[k - degree];
      std::uint64_t pow2 = 1;
      for (int l = 0; l < degree; ++l) {
        pow2 <<= 1;
        if ((poly >> (degree - 1 - l)) & 1u) next ^= pow2 * m[k - l - 1];
      }
      m[k] = next;
    }
    for (int k = 0; k < kSobolBits; ++k) {
      vd[k] = static_cast<std::uint32_t>(m[k] << (kSobolBits - 1 - k));
    }
    offset += 1 + degree;
  }
  return v;
}

std::shared_ptr<const std::vector<std::uint32_t>> directions_for(std::size_t dim) {
  static std::mutex mutex;
  static std::shared_ptr<const std::vector<std::uint32_t>> cached;
  static std::size_t cached_dim = 0;
  std::lock_guard<std::mutex> lock(mutex);
  if (!cached || cached_dim < dim) {
    const std::size_t target = std::max(dim, std::min<std::size_t>(kSobolTableDimensions, 64));
    cached = std::make_shared<const std::vector<std::uint32_t>>(build_directions(target));
    cached_dim = target;
  }
  return cached;
}

double uniform53(std::uint64_t bits) { return static_cast<double>(bits >> 11) * kTwoPow53Inv; }

}  // namespace

const char* to_string(StreamKind kind) {
  return kind == StreamKind::Pseudo ? "pseudo" : "sobol";
}

StreamKind stream_kind_from_string(const std::string& name) {
  if (name == "pseudo") return StreamKind::Pseudo;
  if (name == "sobol") return StreamKind::SobolShifted;
  throw ConfigError("unknown rng kind '" + name + "' (expected pseudo or sobol)");
}

void StreamSpec::validate() const {
  if (dimension == 0) throw ConfigError("stream dimension must be positive");
  if (shifts == 0 || points_per_shift == 0) {
    throw ConfigError("stream needs at least one shift and one point per shift");
  }
  if (kind == StreamKind::SobolShifted) {
    if (dimension > SobolSequence::max_dimension()) {
      std::ostringstream msg;
      msg << "Sobol stream dimension " << dimension << " exceeds the supported "
          << SobolSequence::max_dimension();
      throw ConfigError(msg.str());
    }
    if (points_per_shift >= (std::size_t{1} << 32)) {
      throw ConfigError("Sobol stream supports fewer than 2^32 points per shift");
    }
  }
}

std::size_t SobolSequence::max_dimension() { return kSobolTableDimensions; }

SobolSequence::SobolSequence(std::size_t dimension)
    : dimension_(dimension), directions_(directions_for(dimension)), point_(dimension, 0u) {
  if (dimension == 0 || dimension > max_dimension()) {
    throw DomainError("SobolSequence: unsupported dimension");
  }
}

void SobolSequence::seek(std::uint64_t index) {
  index_ = index;
  const std::uint64_t gray = index ^ (index >> 1);
  const std::uint32_t* v = directions_->data();
  for (std::size_t d = 0; d < dimension_; ++d) {
    std::uint32_t x = 0;
    for (int k = 0; k < kSobolBits; ++k) {
      if ((gray >> k) & 1u) x ^= v[d * kSobolBits + k];
    }
    point_[d] = x;
  }
}

void SobolSequence::advance() {
  ++index_;
  const int c = std::countr_zero(index_);
  const std::uint32_t* v = directions_->data() + c;
  for (std::size_t d = 0; d < dimension_; ++d) point_[d] ^= v[d * kSobolBits];
}

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(const StreamSpec& spec) : RandomStream(spec, 0, spec.total()) {}

RandomStream::RandomStream(const StreamSpec& spec, std::size_t begin, std::size_t end)
    : spec_(spec), begin_(begin), end_(end), next_(begin) {
  spec_.validate();
  if (begin > end || end > spec.total()) throw DomainError("RandomStream: invalid index range");
  if (spec_.kind == StreamKind::SobolShifted) {
    sobol_ = std::make_unique<SobolSequence>(spec_.dimension);
    sobol_->seek(begin % spec_.points_per_shift + 1);
  }
}

std::vector<double> RandomStream::shift_of(std::size_t replicate) const {
  std::vector<double> shift(spec_.dimension);
  const std::uint64_t base = mix64(mix64(spec_.seed) + replicate);
  for (std::size_t d = 0; d < spec_.dimension; ++d) shift[d] = uniform53(mix64(base + d * kGolden));
  return shift;
}

void RandomStream::load_shift(std::size_t replicate) {
  if (replicate == shift_replicate_) return;
  shift_ = shift_of(replicate);
  shift_replicate_ = replicate;
}

void RandomStream::next_point(std::span<double> out) {
  if (next_ >= end_) throw_exhausted(end_ - begin_);
  const std::size_t dim = spec_.dimension;
  if (spec_.kind == StreamKind::Pseudo) {
    std::uint64_t state = mix64(spec_.seed ^ 0x5DEECE66DULL) + next_ * kGolden;
    state = mix64(state);
    for (std::size_t d = 0; d < dim; ++d) {
      state += kGolden;
      out[d] = (static_cast<double>(mix64(state) >> 11) + 0.5) * kTwoPow53Inv;
    }
  } else {
    const std::size_t replicate = next_ / spec_.points_per_shift;
    const std::uint64_t sobol_index = next_ % spec_.points_per_shift + 1;
    if (sobol_->index() != sobol_index) sobol_->seek(sobol_index);
    load_shift(replicate);
    const auto point = sobol_->point();
    for (std::size_t d = 0; d < dim; ++d) {
      double u = static_cast<double>(point[d]) * kTwoPow32Inv + shift_[d];
      if (u >= 1.0) u -= 1.0;
      out[d] = u;
    }
    sobol_->advance();
  }
  ++next_;
}

std::vector<RandomStream> partition(const StreamSpec& spec, std::size_t workers) {
  if (workers == 0) throw DomainError("partition needs at least one worker");
  std::vector<RandomStream> parts;
  const std::size_t total = spec.total();
  parts.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = total * w / workers;
    const std::size_t hi = total * (w + 1) / workers;
    parts.emplace_back(spec, lo, hi);
  }
  return parts;
}

namespace {

template <std::size_t K>
double poly(const double (&c)[K], double x) {
  double acc = c[K - 1];
  for (std::size_t k = K - 1; k-- > 0;) acc = acc * x + c[k];
  return acc;
}

// Wichura (1988), algorithm AS241 PPND16.
constexpr double kA[] = {3.387132872796366608,  133.14166789178437745, 1971.5909503065514427,
                         13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
                         33430.575583588128105, 2509.0809287301226727};
constexpr double kB[] = {1.0,                   42.313330701600911252, 687.1870074920579083,
                         5394.1960214247511077, 21213.794301586595867, 39307.89580009271061,
                         28729.085735721942674, 5226.495278852545925};
constexpr double kC[] = {1.42343711074968357734,  4.6303378461565452959,
                         5.7694972214606914055,   3.64784832476320460504,
                         1.27045825245236838258,  0.24178072517745061177,
                         0.0227238449892691845833, 7.7454501427834140764e-4};
constexpr double kD[] = {1.0,
                         2.05319162663775882187,
                         1.6763848301838038494,
                         0.68976733498510000455,
                         0.14810397642748007459,
                         0.0151986665636164571966,
                         5.475938084995344946e-4,
                         1.05075007164441684324e-9};
constexpr double kE[] = {6.6579046435011037772,   5.4637849111641143699,
                         1.7848265399172913358,   0.29656057182850489123,
                         0.026532189526576123093, 0.0012426609473880784386,
                         2.71155556874348757815e-5, 2.01033439929228813265e-7};
constexpr double kF[] = {1.0,
                         0.59983220655588793769,
                         0.13692988092273580531,
                         0.0148753612908506148525,
                         7.868691311456132591e-4,
                         1.8463183175100546818e-5,
                         1.4215117583164458887e-7,
                         2.04426310338993978564e-15};

}  // namespace

double inv_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw_outside_unit(u);
  const double q = u - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(kA, r) / poly(kB, r);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? u : 1.0 - u));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = poly(kC, r) / poly(kD, r);
  } else {
    r -= 5.0;
    x = poly(kE, r) / poly(kF, r);
  }
  return q < 0.0 ? -x : x;
}

double normal_from_uniform(double u) {
  constexpr double lo = kTwoPow53Inv;
  constexpr double hi = 1.0 - kTwoPow53Inv;
  return inv_normal_cdf(std::clamp(u, lo, hi));
}

}  // namespace rhsim
