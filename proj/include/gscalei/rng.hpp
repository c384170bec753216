#ifndef GSCALEI_RNG_HPP_
#define GSCALEI_RNG_HPP_

#include <cstdint>

namespace gscalei {

/// SplitMix64 finalizer (Steele/Lea/Flood). Used both as the seed expander for
/// Rng and as the stream-derivation mixer.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent sub-stream seed from (seed, tag). The scheme is part
/// of the reproducibility contract:
///
///   derive_stream(s, t) = splitmix64 applied to  s XOR (GOLDEN * (t + 1))
///
/// Nested calls give hierarchical streams, e.g. per-graph seeds are
/// derive_stream(master, 1000 + graph_index) and per-environment sampling
/// streams are derive_stream(graph_seed, kLatentStreamBase + env_code).
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag);

// Stream tags used by the experiment pipeline (documented, not enforced).
namespace stream_tag {
inline constexpr std::uint64_t kDag = 1;
inline constexpr std::uint64_t kMechanisms = 2;
inline constexpr std::uint64_t kDecoder = 3;
inline constexpr std::uint64_t kEncoderInit = 4;
inline constexpr std::uint64_t kEstimatorNoise = 5;
inline constexpr std::uint64_t kMismatch = 6;
inline constexpr std::uint64_t kLatentStreamBase = 0x100;
inline constexpr std::uint64_t kGraphBase = 1000;
}  // namespace stream_tag

/// Deterministic, platform-independent generator: xoshiro256++ (Blackman &
/// Vigna), state seeded by splitmix64 expansion. Normal deviates via
/// Box-Muller with the sine mate cached, so draw order is part of the stream
/// contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal.
  double normal();
  double normal(double mean, double stddev);

  /// Fresh generator for an independent sub-stream.
  Rng split(std::uint64_t tag) const { return Rng(derive_stream(seed_, tag)); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace gscalei

#endif  // GSCALEI_RNG_HPP_
