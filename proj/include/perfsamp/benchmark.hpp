#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfsamp/coalescence.hpp"
#include "perfsamp/validation.hpp"

namespace perfsamp {

/// INF: infinitely many servers. QD: C_s = s. QED: C_s = s + beta sqrt(s).
enum class Regime { INF, QD, QED };

std::string to_string(Regime regime);
std::optional<Regime> regime_from_string(const std::string& name);

struct ScalingRow {
  int scale = 0;
  int capacity = 0;            // 0 for INF
  int replications = 0;
  MeanCi kappa;
  std::optional<MeanCi> tau;   // |tau|; absent for INF
  MeanCi customers;
  MeanCi wall_ms;
};

struct ScalingTable {
  Regime regime = Regime::INF;
  std::vector<ScalingRow> rows;
  double kappa_slope = 0.0;                // log mean kappa against log s
  std::optional<double> tau_slope;         // log mean |tau| against log s
  double customers_slope = 0.0;
  double wall_slope = 0.0;
};

/// Runs `replications` perfect samples of `base` at each scale. The scale
/// speeds up arrivals; the capacity follows the regime.
ScalingTable run_scaling_benchmark(const StationModel& base, Regime regime,
                                   const std::vector<int>& scales, int replications,
                                   std::uint64_t seed, double beta = 2.0);

/// Capacity used at scale s under the regime; empty for INF.
std::optional<int> regime_capacity(Regime regime, int s, double beta);

}  // namespace perfsamp
