#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfsamp/distributions.hpp"
#include "perfsamp/rng.hpp"

namespace perfsamp {

/// One record block. Indices are customer numbers counted backwards from 1.
struct ServiceBlock {
  long start = 1;                      // J_k(0)
  std::optional<long> previous_start;  // J_{k-1}(0); absent for the first block
  std::vector<long> records;           // J_k(1), ..., J_k(gamma_k - 1)
  long gamma = 0;                      // first l with J_k(l) infinite

  /// J_k(0) - J_{k-1}(0), the width of the upper cap on record values.
  std::optional<long> gap() const {
    if (!previous_start) return std::nullopt;
    return start - *previous_start;
  }
};

struct ServiceBlocks {
  double boundary_slope = 0.0;    // mu - epsilon in scaled time units
  std::vector<double> values;     // V_1, V_2, ... ; values[n - 1] is V_n
  std::vector<ServiceBlock> blocks;

  long simulated() const noexcept { return static_cast<long>(values.size()); }
  double value(long n) const { return values.at(static_cast<std::size_t>(n - 1)); }

  /// Start of the block after the last generated one; it equals the last
  /// filled index, so every value up to it is known.
  long next_start() const noexcept { return simulated(); }

  /// All certified block starts, including next_start().
  std::vector<long> block_starts() const;
};

/// p_k(n): probability that the n-th customer after the block start exceeds
/// the boundary n * slope, given that it stays below (n + gap) * slope.
/// Without a gap (first block) this is the plain tail.
double record_exceedance_prob(const DistributionSpec& service, double slope,
                              std::optional<long> gap, long n);

struct RecordDraw {
  std::optional<long> offset;  // empty when no further record exists
  long refinements = 0;
};

/// Offset of the next record after `prev_offset` for the given uniform, by
/// sandwiching the infinite product of non-exceedance probabilities.
RecordDraw sample_next_record(const DistributionSpec& service, double slope,
                              std::optional<long> gap, long prev_offset, double u);

RecordDraw sample_next_record(const DistributionSpec& service, double slope,
                              std::optional<long> gap, long prev_offset, RngStream& stream);

/// Generates record blocks on demand. Values are only filled up to the
/// start of the next block, which is all that downstream certification needs.
class ServiceSampler {
 public:
  ServiceSampler(DistributionSpec service, double slope);

  const ServiceBlocks& blocks() const noexcept { return blocks_; }
  const DistributionSpec& service() const noexcept { return service_; }

  /// Generates one more block.
  void extend(RngStream& stream);

  /// Smallest certified block start >= n, extending as needed.
  long block_start_at_least(long n, RngStream& stream);

  long refinements() const noexcept { return refinements_; }

 private:
  DistributionSpec service_;
  ServiceBlocks blocks_;
  long refinements_ = 0;
};

ServiceBlocks generate_service_blocks(const DistributionSpec& service, double slope, int count,
                                      RngStream& stream);

/// Every violated invariant, described in words; empty when all hold.
std::vector<std::string> check_service_invariants(const ServiceBlocks& blocks);

}  // namespace perfsamp
