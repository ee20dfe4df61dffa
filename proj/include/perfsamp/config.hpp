#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "perfsamp/coalescence.hpp"
#include "perfsamp/loss_network.hpp"

namespace perfsamp {

enum class ModelType { Station, Network };

struct ExperimentConfig {
  long n = 1000;
  std::uint64_t seed = 1;
  std::vector<int> scales = {8, 16, 32, 64};
  std::string regime = "QD";
  double beta = 2.0;
  int replications = 100;
  double forward_horizon = 1e7;
  double burn_in_fraction = 0.1;
  int batches = 20;
};

struct OutputConfig {
  std::string dir;              // empty: fall back to PERFSAMP_OUTPUT_DIR, then "runs"
  std::string format = "json";  // json (one record per line) or csv
};

struct RunConfig {
  ModelType type = ModelType::Station;
  StationModel station;         // used when type is Station
  LossNetworkModel network;     // always filled; a station becomes a one-route network
  ExperimentConfig experiment;
  OutputConfig output;
};

/// Parses and validates a configuration. Throws Error(ConfigError) naming the
/// offending key on unknown, missing or ill-typed entries.
RunConfig parse_config(const nlohmann::json& j);

RunConfig load_config(const std::string& path);

/// Canonical form with every default filled in; parse_config(to_json(c))
/// reproduces c.
nlohmann::ordered_json to_json(const RunConfig& config);

nlohmann::ordered_json to_json(const DistributionSpec& spec);
DistributionSpec distribution_from_json(const nlohmann::json& j, const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// FNV-1a hash of the canonical configuration, as 16 hex digits. The output
/// directory is left out so a run moved elsewhere keeps its hash.
std::string config_hash(const RunConfig& config);

}  // namespace perfsamp
