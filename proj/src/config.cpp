#include "perfsamp/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "perfsamp/benchmark.hpp"
#include "perfsamp/error.hpp"

namespace perfsamp {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(join(path, key), "unknown key");
  }
}

const json& required(const json& j, const std::string& path, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(join(path, key), "missing required key");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "expected a finite number");
  return x;
}

long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<long>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::optional<int> as_capacity(const json& v, const std::string& path) {
  if (v.is_null()) return std::nullopt;
  const long c = as_integer(v, path);
  if (c < 1 || c > 1'000'000) fail(path, "capacity must be a positive integer or null");
  return static_cast<int>(c);
}

ordered_json capacity_json(const std::optional<int>& c) { return c ? ordered_json(*c) : ordered_json(nullptr); }

std::string heavy_name(HeavyTailMode m) {
  switch (m) {
    case HeavyTailMode::Auto: return "auto";
    case HeavyTailMode::On: return "on";
    case HeavyTailMode::Off: return "off";
  }
  return "auto";
}

std::string order_name(ScanOrder o) { return o == ScanOrder::Nearest ? "nearest" : "earliest"; }

SamplerOptions parse_sampler(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"epsilon_fraction", "m_fraction", "block_budget", "heavy_tail", "scan_order",
                           "verify_invariants"});
  SamplerOptions o;
  if (j.contains("epsilon_fraction")) {
    o.epsilon_fraction = as_number(j["epsilon_fraction"], join(path, "epsilon_fraction"));
    if (!(o.epsilon_fraction > 0 && o.epsilon_fraction < 1)) {
      fail(join(path, "epsilon_fraction"), "must lie in (0, 1)");
    }
  }
  if (j.contains("m_fraction")) {
    o.m_fraction = as_number(j["m_fraction"], join(path, "m_fraction"));
    if (!(o.m_fraction > 0)) fail(join(path, "m_fraction"), "must be positive");
  }
  if (j.contains("block_budget")) {
    o.block_budget = as_integer(j["block_budget"], join(path, "block_budget"));
    if (o.block_budget < 1) fail(join(path, "block_budget"), "must be at least 1");
  }
  if (j.contains("heavy_tail")) {
    const auto s = as_string(j["heavy_tail"], join(path, "heavy_tail"));
    if (s == "auto") o.heavy_tail = HeavyTailMode::Auto;
    else if (s == "on") o.heavy_tail = HeavyTailMode::On;
    else if (s == "off") o.heavy_tail = HeavyTailMode::Off;
    else fail(join(path, "heavy_tail"), "expected auto, on or off");
  }
  if (j.contains("scan_order")) {
    const auto s = as_string(j["scan_order"], join(path, "scan_order"));
    if (s == "nearest") o.scan_order = ScanOrder::Nearest;
    else if (s == "earliest") o.scan_order = ScanOrder::Earliest;
    else fail(join(path, "scan_order"), "expected nearest or earliest");
  }
  if (j.contains("verify_invariants")) {
    const auto& v = j["verify_invariants"];
    if (!v.is_boolean()) fail(join(path, "verify_invariants"), "expected true or false");
    o.verify_invariants = v.get<bool>();
  }
  return o;
}

ExperimentConfig parse_experiment(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"n", "seed", "scales", "regime", "beta", "replications", "forward_horizon",
                           "burn_in_fraction", "batches"});
  ExperimentConfig e;
  if (j.contains("n")) {
    e.n = as_integer(j["n"], join(path, "n"));
    if (e.n < 1) fail(join(path, "n"), "must be at least 1");
  }
  if (j.contains("seed")) {
    const auto& v = j["seed"];
    if (!v.is_number_unsigned()) fail(join(path, "seed"), "expected a non-negative integer");
    e.seed = v.get<std::uint64_t>();
  }
  if (j.contains("scales")) {
    const auto& v = j["scales"];
    if (!v.is_array()) fail(join(path, "scales"), "expected an array of integers");
    e.scales.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = join(path, "scales") + "[" + std::to_string(i) + "]";
      const long s = as_integer(v[i], p);
      if (s < 1 || s > 1'000'000) fail(p, "scale must be a positive integer");
      e.scales.push_back(static_cast<int>(s));
    }
  }
  if (j.contains("regime")) {
    e.regime = as_string(j["regime"], join(path, "regime"));
    if (!regime_from_string(e.regime)) fail(join(path, "regime"), "expected INF, QD or QED");
  }
  if (j.contains("beta")) {
    e.beta = as_number(j["beta"], join(path, "beta"));
    if (!(e.beta >= 0)) fail(join(path, "beta"), "must be non-negative");
  }
  if (j.contains("replications")) {
    const long r = as_integer(j["replications"], join(path, "replications"));
    if (r < 1 || r > 100'000'000) fail(join(path, "replications"), "must be a positive integer");
    e.replications = static_cast<int>(r);
  }
  if (j.contains("forward_horizon")) {
    e.forward_horizon = as_number(j["forward_horizon"], join(path, "forward_horizon"));
    if (!(e.forward_horizon > 0)) fail(join(path, "forward_horizon"), "must be positive");
  }
  if (j.contains("burn_in_fraction")) {
    e.burn_in_fraction = as_number(j["burn_in_fraction"], join(path, "burn_in_fraction"));
    if (!(e.burn_in_fraction >= 0 && e.burn_in_fraction < 1)) {
      fail(join(path, "burn_in_fraction"), "must lie in [0, 1)");
    }
  }
  if (j.contains("batches")) {
    const long b = as_integer(j["batches"], join(path, "batches"));
    if (b < 2 || b > 100'000) fail(join(path, "batches"), "must be at least 2");
    e.batches = static_cast<int>(b);
  }
  return e;
}

OutputConfig parse_output(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"dir", "format"});
  OutputConfig o;
  if (j.contains("dir")) o.dir = as_string(j["dir"], join(path, "dir"));
  if (j.contains("format")) {
    o.format = as_string(j["format"], join(path, "format"));
    if (o.format != "json" && o.format != "csv") fail(join(path, "format"), "expected json or csv");
  }
  return o;
}

int parse_scale(const json& j, const std::string& path) {
  if (!j.contains("scale")) return 1;
  const long s = as_integer(j["scale"], join(path, "scale"));
  if (s < 1 || s > 1'000'000) fail(join(path, "scale"), "must be a positive integer");
  return static_cast<int>(s);
}

void parse_model(const json& j, const std::string& path, RunConfig& config) {
  require_object(j, path);
  const std::string type = as_string(required(j, path, "type"), join(path, "type"));
  if (type == "station") {
    reject_unknown(j, path, {"type", "interarrival", "service", "capacity", "scale"});
    config.type = ModelType::Station;
    StationModel& m = config.station;
    m.interarrival = distribution_from_json(required(j, path, "interarrival"), join(path, "interarrival"));
    m.service = distribution_from_json(required(j, path, "service"), join(path, "service"));
    m.capacity = j.contains("capacity") ? as_capacity(j["capacity"], join(path, "capacity")) : std::nullopt;
    m.scale = parse_scale(j, path);
    config.network = single_station_network(m);
    return;
  }
  if (type != "network") fail(join(path, "type"), "expected station or network");
  reject_unknown(j, path, {"type", "stations", "routes", "scale"});
  config.type = ModelType::Network;
  LossNetworkModel& m = config.network;
  const json& stations = required(j, path, "stations");
  const std::string sp = join(path, "stations");
  if (!stations.is_array() || stations.empty()) fail(sp, "expected a non-empty array");
  for (std::size_t s = 0; s < stations.size(); ++s) {
    const std::string p = sp + "[" + std::to_string(s) + "]";
    require_object(stations[s], p);
    reject_unknown(stations[s], p, {"capacity"});
    m.capacities.push_back(as_capacity(required(stations[s], p, "capacity"), join(p, "capacity")));
  }
  const json& routes = required(j, path, "routes");
  const std::string rp = join(path, "routes");
  if (!routes.is_array() || routes.empty()) fail(rp, "expected a non-empty array");
  for (std::size_t l = 0; l < routes.size(); ++l) {
    const std::string p = rp + "[" + std::to_string(l) + "]";
    require_object(routes[l], p);
    reject_unknown(routes[l], p, {"stations", "interarrival", "service"});
    const json& uses = required(routes[l], p, "stations");
    if (!uses.is_array() || uses.empty()) fail(join(p, "stations"), "expected a non-empty array of station indices");
    std::vector<int> row(stations.size(), 0);
    for (std::size_t k = 0; k < uses.size(); ++k) {
      const std::string up = join(p, "stations") + "[" + std::to_string(k) + "]";
      const long idx = as_integer(uses[k], up);
      if (idx < 0 || idx >= static_cast<long>(stations.size())) fail(up, "station index out of range");
      if (row[idx]) fail(up, "station listed twice");
      row[idx] = 1;
    }
    m.incidence.push_back(std::move(row));
    m.interarrival.push_back(distribution_from_json(required(routes[l], p, "interarrival"), join(p, "interarrival")));
    m.service.push_back(distribution_from_json(required(routes[l], p, "service"), join(p, "service")));
  }
  m.scale = parse_scale(j, path);
}

}  // namespace

DistributionSpec distribution_from_json(const nlohmann::json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"family", "params", "scale"});
  const std::string name = as_string(required(j, path, "family"), join(path, "family"));
  const auto family = family_from_string(name);
  if (!family) fail(join(path, "family"), "unknown distribution family '" + name + "'");
  const json& pj = required(j, path, "params");
  if (!pj.is_array()) fail(join(path, "params"), "expected an array of numbers");
  std::vector<double> p;
  for (std::size_t i = 0; i < pj.size(); ++i) {
    p.push_back(as_number(pj[i], join(path, "params") + "[" + std::to_string(i) + "]"));
  }
  const std::size_t want = (*family == Family::Exponential || *family == Family::Deterministic) ? 1 : 2;
  if (p.size() != want) {
    fail(join(path, "params"), "family " + std::string(to_string(*family)) + " takes " +
                                   std::to_string(want) + " parameter(s)");
  }
  double scale = 1.0;
  if (j.contains("scale")) {
    scale = as_number(j["scale"], join(path, "scale"));
    if (!(scale > 0)) fail(join(path, "scale"), "must be positive");
  }
  try {
    DistributionSpec spec = [&] {
      switch (*family) {
        case Family::Exponential: return DistributionSpec::exponential(p[0]);
        case Family::Gamma: return DistributionSpec::gamma(p[0], p[1]);
        case Family::Uniform: return DistributionSpec::uniform(p[0], p[1]);
        case Family::Deterministic: return DistributionSpec::deterministic(p[0]);
        case Family::LogNormal: return DistributionSpec::lognormal(p[0], p[1]);
        case Family::Weibull: return DistributionSpec::weibull(p[0], p[1]);
        case Family::Pareto: return DistributionSpec::pareto(p[0], p[1]);
      }
      fail(path, "unsupported family");
    }();
    return scale == 1.0 ? spec : spec.scaled(scale);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(path, e.what());
  }
}

nlohmann::ordered_json to_json(const DistributionSpec& spec) {
  ordered_json j;
  j["family"] = std::string(to_string(spec.family()));
  const bool one = spec.family() == Family::Exponential || spec.family() == Family::Deterministic;
  j["params"] = one ? ordered_json::array({spec.p1()}) : ordered_json::array({spec.p1(), spec.p2()});
  j["scale"] = spec.scale();
  return j;
}

RunConfig parse_config(const nlohmann::json& j) {
  require_object(j, "");
  reject_unknown(j, "", {"model", "sampler", "experiment", "output"});
  RunConfig c;
  parse_model(required(j, "", "model"), "model", c);
  const SamplerOptions options = j.contains("sampler") ? parse_sampler(j["sampler"], "sampler") : SamplerOptions{};
  c.station.options = options;
  c.network.options = options;
  if (j.contains("experiment")) c.experiment = parse_experiment(j["experiment"], "experiment");
  if (j.contains("output")) c.output = parse_output(j["output"], "output");
  for (const auto& issue : validate_model(c.network)) fail("model", issue.message);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, path + ": cannot open configuration file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  ordered_json out;
  ordered_json model;
  if (c.type == ModelType::Station) {
    model["type"] = "station";
    model["interarrival"] = to_json(c.station.interarrival);
    model["service"] = to_json(c.station.service);
    model["capacity"] = capacity_json(c.station.capacity);
    model["scale"] = c.station.scale;
  } else {
    const auto& m = c.network;
    model["type"] = "network";
    model["stations"] = ordered_json::array();
    for (const auto& cap : m.capacities) model["stations"].push_back({{"capacity", capacity_json(cap)}});
    model["routes"] = ordered_json::array();
    for (int l = 0; l < m.routes(); ++l) {
      ordered_json r;
      r["stations"] = ordered_json::array();
      for (int s = 0; s < m.stations(); ++s) {
        if (m.incidence[l][s]) r["stations"].push_back(s);
      }
      r["interarrival"] = to_json(m.interarrival[l]);
      r["service"] = to_json(m.service[l]);
      model["routes"].push_back(std::move(r));
    }
    model["scale"] = m.scale;
  }
  out["model"] = std::move(model);
  const SamplerOptions& o = c.network.options;
  out["sampler"] = {{"epsilon_fraction", o.epsilon_fraction},
                    {"m_fraction", o.m_fraction},
                    {"block_budget", o.block_budget},
                    {"heavy_tail", heavy_name(o.heavy_tail)},
                    {"scan_order", order_name(o.scan_order)},
                    {"verify_invariants", o.verify_invariants}};
  const ExperimentConfig& e = c.experiment;
  out["experiment"] = {{"n", e.n},
                       {"seed", e.seed},
                       {"scales", e.scales},
                       {"regime", e.regime},
                       {"beta", e.beta},
                       {"replications", e.replications},
                       {"forward_horizon", e.forward_horizon},
                       {"burn_in_fraction", e.burn_in_fraction},
                       {"batches", e.batches}};
  out["output"] = {{"dir", c.output.dir}, {"format", c.output.format}};
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& config) {
  RunConfig c = config;
  c.output.dir.clear();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
  return buf;
}

}  // namespace perfsamp
