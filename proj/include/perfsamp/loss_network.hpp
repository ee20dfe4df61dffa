#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfsamp/coalescence.hpp"
#include "perfsamp/error.hpp"

namespace perfsamp {

/// Route l holds one circuit at every station j with incidence[l][j] = 1 for
/// its whole service time.
struct LossNetworkModel {
  std::vector<std::optional<int>> capacities;   // per station; empty means unlimited
  std::vector<std::vector<int>> incidence;      // [route][station], entries 0 or 1
  std::vector<DistributionSpec> interarrival;   // per route
  std::vector<DistributionSpec> service;        // per route
  int scale = 1;
  SamplerOptions options;

  int stations() const noexcept { return static_cast<int>(capacities.size()); }
  int routes() const noexcept { return static_cast<int>(incidence.size()); }
};

struct ModelIssue {
  ErrorCode code;
  std::string message;
};

/// Every problem found in the model; empty when it can be sampled.
std::vector<ModelIssue> validate_model(const LossNetworkModel& model);

/// The network equivalent of a single station.
LossNetworkModel single_station_network(const StationModel& station);

/// Station occupancies sum_l n_l P_l(j) for per-route counts n.
std::vector<int> station_occupancy(const LossNetworkModel& model, const std::vector<int>& counts);

/// tau' with R(tau') <= |tau'| and no station over capacity on [tau', T'].
std::optional<Coalescence> detect_network_coalescence(
    const EventTimeline& timeline, const LossNetworkModel& model,
    ScanOrder order = ScanOrder::Nearest, std::optional<double> scan_below = std::nullopt);

struct NetworkSample {
  std::vector<SystemState> routes;      // admitted customers per route at time 0
  std::vector<int> station_occupancy;   // per station
  std::vector<long> kappas;             // per route
  std::optional<double> tau;
  std::optional<double> T;
  long customers = 0;
  int blocks_used = 0;
  long rejections = 0;
  double wall_ms = 0.0;

  std::vector<int> route_counts() const;
};

NetworkSample perfect_sample_network(const LossNetworkModel& model, const RngStream& stream);

}  // namespace perfsamp
