#pragma once

#include <vector>

#include "perfsamp/loss_network.hpp"
#include "perfsamp/validation.hpp"

namespace perfsamp {

struct ForwardOptions {
  double horizon = 1e7;         // simulated time, including burn-in
  double burn_in_fraction = 0.1;
  int batches = 20;
};

/// Long-run averages of an ordinary forward simulation, with batch-means
/// confidence intervals.
struct ForwardEstimate {
  std::vector<MeanCi> station_occupancy;   // time-average occupancy per station
  std::vector<MeanCi> station_full;        // fraction of time at capacity per station
  std::vector<MeanCi> route_occupancy;     // time-average customers per route
  std::vector<MeanCi> route_blocking;      // fraction of arrivals lost per route
  std::vector<double> occupancy_pmf;       // time-fraction of station 0 at each level
  long arrivals = 0;
};

/// Simulates the network forward from empty with renewal arrivals started
/// at time 0 and discards the burn-in.
ForwardEstimate simulate_forward(const LossNetworkModel& model, const ForwardOptions& options,
                                 RngStream& stream);

ForwardEstimate simulate_forward(const StationModel& model, const ForwardOptions& options,
                                 RngStream& stream);

}  // namespace perfsamp
