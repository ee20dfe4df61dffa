#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "perfsamp/distributions.hpp"
#include "perfsamp/rng.hpp"
#include "perfsamp/service_sampler.hpp"

namespace perfsamp {

enum class HeavyTailMode { Auto, On, Off };

/// The certifying walk S_n = sum_{i<=n} Y_i with Y_i = (mu - epsilon) - X_{i+1},
/// where X is replaced by min(X, b) on the heavy-tail path.
struct WalkParams {
  DistributionSpec interarrival = DistributionSpec::exponential(1.0);
  TiltContext tilt;
  double m = 0.0;
  bool heavy_tail = false;

  double slope() const noexcept { return tilt.slope(); }
};

/// epsilon and m are given as fractions of the (scaled) mean interarrival time.
WalkParams make_walk_params(const DistributionSpec& interarrival, double epsilon_fraction = 0.2,
                            double m_fraction = 1.0, HeavyTailMode mode = HeavyTailMode::Auto);

/// One walk increment together with the untruncated interarrival time it came from.
struct Step {
  double y = 0.0;
  double raw_x = 0.0;
};
using Path = std::vector<Step>;

double path_end(const Path& path) noexcept;

/// Work counters shared by the walk routines.
struct WalkStats {
  long proposals = 0;
  long rejections = 0;
  long tilted_steps = 0;
};

struct UpcrossDraw {
  bool crossed = false;
  Path path;  // the path up to the first passage above xi when crossed
};

/// Bernoulli with success probability q(xi) = P(the walk ever exceeds xi).
/// xi = +inf gives 0 without consuming randomness; xi < 0 gives 1.
UpcrossDraw bernoulli_upcross(const WalkParams& params, double xi, RngStream& stream,
                              WalkStats* stats = nullptr);

/// Nominal path to the first passage strictly below gamma < 0, conditioned
/// on never exceeding xi, now or later.
Path segment_to_down_level(const WalkParams& params, double xi, double gamma, RngStream& stream,
                           WalkStats* stats = nullptr);

struct UpSegment {
  bool cont = false;
  Path path;  // path to the first passage above m when cont
};

/// Decides whether the walk ever rises by more than m, conditioned on never
/// exceeding xi; on success returns the path up to that rise.
UpSegment segment_upcross_or_terminate(const WalkParams& params, double xi, RngStream& stream,
                                       WalkStats* stats = nullptr);

/// h nominal steps conditioned on never exceeding xi, now or later.
Path bridge_fixed_length(const WalkParams& params, long h, double xi, RngStream& stream,
                         WalkStats* stats = nullptr);

struct ArrivalBlock {
  long delta0 = 0;            // Delta_j(0)
  std::vector<long> deltas;   // Delta_j(1..alpha_j)
  std::vector<long> gammas;   // Gamma_j(1..alpha_j - 1)
  long alpha = 0;
  long kappa = 0;
  double level = 0.0;         // S at Delta_j(0)
  double barrier_after = 0.0; // S at Delta_j(alpha_j) plus m; never exceeded afterwards
};

struct ArrivalBlocks {
  double slope = 0.0;
  double m = 0.0;
  bool heavy_tail = false;
  std::optional<double> truncation_b;

  std::vector<double> walk;        // S_0 = 0, S_1, ...
  std::vector<double> raw_x;       // raw_x[i] = X_{i+2}, the raw time behind Y_{i+1}
  std::vector<double> arrivals;    // A_1, A_2, ... (negative)
  std::vector<double> arrivals_b;  // truncated arrivals A_n(b) on the heavy path
  double a1 = 0.0;                 // |A_1|
  double a1_truncated = 0.0;       // |A_1(b)|
  std::vector<ArrivalBlock> blocks;

  long steps() const noexcept { return static_cast<long>(walk.size()) - 1; }
  double arrival(long n) const { return arrivals.at(static_cast<std::size_t>(n - 1)); }
  /// X_n for n >= 2.
  double interarrival(long n) const { return raw_x.at(static_cast<std::size_t>(n - 2)); }
  /// kappa_0 = 1 followed by the block ends.
  std::vector<long> kappas() const;
};

/// Builds arrival blocks one at a time. The callback maps n to the smallest
/// certified service block start >= n.
class ArrivalSampler {
 public:
  using BlockStartLookup = std::function<long(long)>;

  explicit ArrivalSampler(WalkParams params);

  void extend(const BlockStartLookup& block_start_at_least, RngStream& stream);

  const ArrivalBlocks& blocks() const noexcept { return blocks_; }
  const WalkParams& params() const noexcept { return params_; }
  const WalkStats& stats() const noexcept { return stats_; }

 private:
  void begin(RngStream& stream);
  void append(const Path& path);

  WalkParams params_;
  ArrivalBlocks blocks_;
  double barrier_;
  WalkStats stats_;
};

ArrivalBlocks generate_arrival_blocks(const WalkParams& params, const ServiceBlocks& service,
                                      int count, RngStream& stream);

/// Same as generate_arrival_blocks; requires params.heavy_tail.
ArrivalBlocks generate_arrival_blocks_heavy(const WalkParams& params,
                                            const ServiceBlocks& service, int count,
                                            RngStream& stream);

/// Every violated invariant in words; empty when all hold.
std::vector<std::string> check_arrival_invariants(const ArrivalBlocks& blocks,
                                                  const std::vector<long>& service_starts);

}  // namespace perfsamp
