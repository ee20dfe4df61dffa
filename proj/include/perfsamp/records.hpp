#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "perfsamp/coalescence.hpp"
#include "perfsamp/loss_network.hpp"

namespace perfsamp {

/// Provenance stamped on every output record.
struct RecordMeta {
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  long replication = 0;
  bool timing = false;  // include wall_ms; off keeps reruns byte-identical
};

nlohmann::ordered_json state_to_json(const SystemState& state);

/// Occupancy, age, remaining times, kappa, tau and T of a single-route
/// sample. Used to compare a station with its one-route network form.
nlohmann::ordered_json state_payload(const SystemState& state, long kappa,
                                     const std::optional<double>& tau, const std::optional<double>& T);

nlohmann::ordered_json sample_record(const PerfectSample& sample, const RecordMeta& meta);
nlohmann::ordered_json network_record(const NetworkSample& sample, const RecordMeta& meta);

/// printf("%.17g"), which round-trips every double.
std::string format_number(double x);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& text);

/// Flattens a flat JSON object into one CSV line (no trailing newline).
/// Numbers use format_number, arrays of scalars are joined with ';', nested
/// objects are embedded as compact JSON, null becomes an empty field.
std::string csv_line(const nlohmann::ordered_json& record);
std::string csv_header(const nlohmann::ordered_json& record);

}  // namespace perfsamp
