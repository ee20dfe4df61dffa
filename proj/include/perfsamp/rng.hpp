#pragma once

#include <cstdint>
#include <random>

namespace perfsamp {

/// A reproducible uniform stream identified by (seed, stream_id).
///
/// The engine is std::mt19937_64 seeded through std::seed_seq, both of which
/// the standard specifies bit-exactly, so a given (seed, stream_id) yields the
/// same sequence on every conforming platform. Uniforms are produced from the
/// top 53 bits with a half-ulp offset and therefore never hit 0 or 1.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  double next_uniform();

  /// An independent stream for a sub-task, keyed by `child` under this
  /// stream's (seed, stream_id). Does not advance this stream.
  RngStream split(std::uint64_t child) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

RngStream create_stream(std::uint64_t seed, std::uint64_t stream_id);

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stream id for replication `replication` of experiment `experiment`.
std::uint64_t derive_stream_id(std::uint64_t experiment, std::uint64_t replication) noexcept;

}  // namespace perfsamp
