#include "perfsamp/records.hpp"

#include <cstdio>

namespace perfsamp {

namespace {

using nlohmann::ordered_json;

ordered_json optional_number(const std::optional<double>& x) {
  return x ? ordered_json(*x) : ordered_json(nullptr);
}

void stamp_front(ordered_json& j, const RecordMeta& meta) {
  j["replication"] = meta.replication;
  j["seed"] = meta.seed;
  j["stream_id"] = meta.stream_id;
}

void stamp_back(ordered_json& j, const RecordMeta& meta, double wall_ms) {
  if (meta.timing) j["wall_ms"] = wall_ms;
  j["config_hash"] = meta.config_hash;
  j["version"] = meta.version;
}

std::string scalar_text(const ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_number(v.get<double>());
  return v.dump();
}

}  // namespace

nlohmann::ordered_json state_to_json(const SystemState& state) {
  ordered_json j;
  j["occupancy"] = state.occupancy();
  j["age"] = state.elapsed_age;
  j["remaining"] = state.remaining;
  return j;
}

nlohmann::ordered_json state_payload(const SystemState& state, long kappa,
                                     const std::optional<double>& tau, const std::optional<double>& T) {
  ordered_json j = state_to_json(state);
  j["kappa"] = kappa;
  j["tau"] = optional_number(tau);
  j["T"] = optional_number(T);
  return j;
}

nlohmann::ordered_json sample_record(const PerfectSample& s, const RecordMeta& meta) {
  ordered_json j;
  stamp_front(j, meta);
  const ordered_json payload = state_payload(s.state, s.kappa, s.tau, s.T);
  for (const auto& [k, v] : payload.items()) j[k] = v;
  j["customers"] = s.customers;
  j["blocks"] = s.blocks_used;
  j["rejections"] = s.rejections;
  stamp_back(j, meta, s.wall_ms);
  return j;
}

nlohmann::ordered_json network_record(const NetworkSample& s, const RecordMeta& meta) {
  ordered_json j;
  stamp_front(j, meta);
  j["station_occupancy"] = s.station_occupancy;
  j["route_occupancy"] = s.route_counts();
  j["routes"] = ordered_json::array();
  for (const auto& r : s.routes) j["routes"].push_back(state_to_json(r));
  j["kappa"] = s.kappas;
  j["tau"] = optional_number(s.tau);
  j["T"] = optional_number(s.T);
  j["customers"] = s.customers;
  j["blocks"] = s.blocks_used;
  j["rejections"] = s.rejections;
  stamp_back(j, meta, s.wall_ms);
  return j;
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_line(const nlohmann::ordered_json& record) {
  std::string line;
  bool first = true;
  for (const auto& [key, v] : record.items()) {
    std::string text;
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) text += ';';
        text += v[i].is_structured() ? v[i].dump() : scalar_text(v[i]);
      }
    } else {
      text = scalar_text(v);
    }
    if (!first) line += ',';
    line += csv_field(text);
    first = false;
  }
  return line;
}

std::string csv_header(const nlohmann::ordered_json& record) {
  std::string line;
  bool first = true;
  for (const auto& [key, v] : record.items()) {
    if (!first) line += ',';
    line += csv_field(key);
    first = false;
  }
  return line;
}

}  // namespace perfsamp
