#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "perfsamp/arrival_sampler.hpp"
#include "perfsamp/backward_process.hpp"
#include "perfsamp/distributions.hpp"
#include "perfsamp/rng.hpp"
#include "perfsamp/service_sampler.hpp"

namespace perfsamp {

/// Order in which departure epochs are tried as coalescence candidates.
enum class ScanOrder { Nearest, Earliest };

struct SamplerOptions {
  double epsilon_fraction = 0.2;
  double m_fraction = 1.0;
  HeavyTailMode heavy_tail = HeavyTailMode::Auto;
  long block_budget = 10'000;
  ScanOrder scan_order = ScanOrder::Nearest;
  /// Check every record invariant before returning a sample (always done in
  /// heavy-tail mode). A violation raises GuardViolation.
  bool verify_invariants = false;
};

struct StationModel {
  DistributionSpec interarrival = DistributionSpec::exponential(1.0);
  DistributionSpec service = DistributionSpec::exponential(1.0);
  std::optional<int> capacity;  // empty means infinitely many servers
  int scale = 1;                // arrivals are sped up by this factor
  SamplerOptions options;

  DistributionSpec scaled_interarrival() const { return interarrival.scaled(scale); }
};

/// make_walk_params memoized per thread; tilt roots need quadrature, so
/// repeated samples of one model share them.
const WalkParams& cached_walk_params(const DistributionSpec& interarrival,
                                     const SamplerOptions& options);

/// Backward stream of one customer class: service records and the arrival
/// walk are extended together, one arrival block at a time.
class BackwardSampler {
 public:
  BackwardSampler(const DistributionSpec& interarrival, const DistributionSpec& service,
                  const SamplerOptions& options, const RngStream& stream);
  BackwardSampler(const WalkParams& walk, const DistributionSpec& service,
                  const RngStream& stream);

  void extend();

  int blocks() const noexcept { return static_cast<int>(arrivals_.blocks().blocks.size()); }
  /// kappa_j of the latest block.
  long kappa() const;
  /// A_{kappa_{j-1}}: the state is exact on [certified_from(), 0].
  double certified_from() const;
  /// Customers 1, ..., kappa_j with their raw arrival epochs; later ones have
  /// all left by certified_from().
  std::vector<MarkedPoint> points() const;
  /// Largest customer index for which anything was simulated.
  long customers() const;
  long rejections() const noexcept { return arrivals_.stats().rejections; }

  const ArrivalBlocks& arrival_blocks() const noexcept { return arrivals_.blocks(); }
  const ServiceBlocks& service_blocks() const noexcept { return service_.blocks(); }
  const WalkParams& walk() const noexcept { return arrivals_.params(); }

  /// Violations of the service and arrival record invariants.
  std::vector<std::string> check_invariants() const;

 private:
  ServiceSampler service_;
  ArrivalSampler arrivals_;
  RngStream service_stream_;
  RngStream arrival_stream_;
};

struct Coalescence {
  double tau = 0.0;
  double T = 0.0;
};

/// Scans departure epochs tau in the timeline for R(tau) < |tau| (or <= when
/// not strict) and slack >= 0 on every event in [tau, tau + R(tau)].
/// slack[k] is the spare capacity after k events. Only candidates strictly
/// below `scan_below` are tried when it is given.
std::optional<Coalescence> scan_for_coalescence(const EventTimeline& timeline,
                                                const std::vector<int>& slack, bool strict,
                                                ScanOrder order,
                                                std::optional<double> scan_below = std::nullopt);

std::optional<Coalescence> detect_coalescence(const EventTimeline& timeline,
                                              std::optional<int> capacity,
                                              ScanOrder order = ScanOrder::Nearest,
                                              std::optional<double> scan_below = std::nullopt);

/// Loss state per route at time 0 after replaying from the infinite-server
/// state at T.
struct ReplayResult {
  std::vector<SystemState> routes;
  std::vector<std::vector<long>> admitted;  // indices of admitted arrivals in (T, 0]
  std::vector<std::vector<long>> blocked;
};

/// admit(counts, route) decides an arrival given current per-route counts.
using AdmissionRule = std::function<bool(const std::vector<int>&, int)>;

ReplayResult replay_forward(const std::vector<std::vector<MarkedPoint>>& routes, double T,
                            double certified_from, const AdmissionRule& admit);

SystemState replay_loss_forward(const std::vector<MarkedPoint>& points, double T,
                                std::optional<int> capacity, double certified_from);

struct PerfectSample {
  SystemState state;
  long kappa = 0;
  std::optional<double> tau;
  std::optional<double> T;
  long customers = 0;
  int blocks_used = 0;
  long rejections = 0;
  double wall_ms = 0.0;
};

PerfectSample perfect_sample_infinite(const StationModel& model, const RngStream& stream);
PerfectSample perfect_sample_loss(const StationModel& model, const RngStream& stream);

}  // namespace perfsamp
