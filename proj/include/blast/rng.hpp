#pragma once

#include <array>
#include <cstdint>
#include <cstddef>

namespace blast {

/// Deterministic seedable random stream (xoshiro256++ with splitmix64 stream
/// derivation). Identical (seed, streamId) pairs yield bit-identical draw
/// sequences on every platform; distinct streamIds give independent streams.
///
/// All samplers in this library draw exclusively through RngStream, so a run
/// is fully reproducible from its seed. Each concurrent worker must own its
/// own stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal via Box-Muller (consumes exactly two uniforms).
  double normal();

  /// Unit-scale Gamma(shape) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  /// Uniform index in {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
};

/// Stable 64-bit mix of (seed, salt), used to derive child seeds for chains,
/// replicates and methods without overlapping streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace blast
