#include "doctest.h"

#include <string>

#include "perfsamp/config.hpp"
#include "perfsamp/records.hpp"

using namespace perfsamp;
using nlohmann::json;

namespace {

json station_json() {
  return json::parse(R"({
    "model": {"type": "station",
              "interarrival": {"family": "erlang", "params": [2, 4.0]},
              "service": {"family": "lognormal", "params": [-0.5, 1.0], "scale": 2.0},
              "capacity": 5, "scale": 3},
    "sampler": {"epsilon_fraction": 0.25, "scan_order": "earliest", "heavy_tail": "off"},
    "experiment": {"n": 10, "seed": 18446744073709551615, "scales": [2, 4], "regime": "QED", "beta": 1.5},
    "output": {"format": "csv"}
  })");
}

json network_json() {
  return json::parse(R"({
    "model": {"type": "network",
              "stations": [{"capacity": 4}, {"capacity": null}],
              "routes": [
                {"stations": [0, 1], "interarrival": {"family": "exponential", "params": [1.5]},
                 "service": {"family": "weibull", "params": [0.7, 0.1]}},
                {"stations": [1], "interarrival": {"family": "gamma", "params": [0.5, 0.5]},
                 "service": {"family": "pareto", "params": [2.5, 0.6]}}]}
  })");
}

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("station configuration parses and round-trips") {
  const RunConfig c = parse_config(station_json());
  CHECK(c.type == ModelType::Station);
  CHECK(c.station.interarrival == DistributionSpec::erlang(2, 4.0));
  CHECK(c.station.service == DistributionSpec::lognormal(-0.5, 1.0).scaled(2.0));
  CHECK(*c.station.capacity == 5);
  CHECK(c.station.scale == 3);
  CHECK(c.network.options.scan_order == ScanOrder::Earliest);
  CHECK(c.station.options.heavy_tail == HeavyTailMode::Off);
  CHECK(c.experiment.seed == 18446744073709551615ULL);
  CHECK(c.output.format == "csv");

  const auto once = to_json(c);
  const RunConfig again = parse_config(json::parse(once.dump()));
  CHECK(to_json(again).dump() == once.dump());
  CHECK(again.station.service == c.station.service);
  CHECK(config_hash(again) == config_hash(c));
}

TEST_CASE("network configuration parses and round-trips") {
  const RunConfig c = parse_config(network_json());
  CHECK(c.type == ModelType::Network);
  REQUIRE(c.network.routes() == 2);
  CHECK(c.network.incidence[0] == std::vector<int>{1, 1});
  CHECK(c.network.incidence[1] == std::vector<int>{0, 1});
  CHECK_FALSE(c.network.capacities[1]);
  const auto once = to_json(c);
  CHECK(to_json(parse_config(json::parse(once.dump()))).dump() == once.dump());
}

TEST_CASE("configuration errors name the key") {
  json j = station_json();
  j["model"]["colour"] = 1;
  CHECK(error_of(j).find("model.colour: unknown key") != std::string::npos);

  j = station_json();
  j["model"].erase("service");
  CHECK(error_of(j).find("model.service: missing required key") != std::string::npos);

  j = network_json();
  j["model"]["routes"][1]["interarrival"].erase("params");
  CHECK(error_of(j).find("model.routes[1].interarrival.params") != std::string::npos);

  j = network_json();
  j["model"]["routes"][0]["stations"] = {0, 2};
  CHECK(error_of(j).find("out of range") != std::string::npos);

  j = station_json();
  j["sampler"]["epsilon_fraction"] = 1.0;
  CHECK(error_of(j).find("sampler.epsilon_fraction") != std::string::npos);

  j = station_json();
  j["experiment"]["n"] = "ten";
  CHECK(error_of(j).find("experiment.n: expected an integer") != std::string::npos);

  j = station_json();
  j["model"]["interarrival"] = {{"family", "exponential"}, {"params", {1.0, 2.0}}};
  CHECK(error_of(j).find("takes 1 parameter") != std::string::npos);

  // Bad parameters surface as configuration errors too.
  j = station_json();
  j["model"]["service"] = {{"family", "pareto"}, {"params", {0.5, 1.0}}};
  CHECK(error_of(j).find("model.service") != std::string::npos);

  // Deterministic gaps have no tilt root.
  j = station_json();
  j["model"]["interarrival"] = {{"family", "deterministic"}, {"params", {1.0}}};
  CHECK_FALSE(error_of(j).empty());

  CHECK(error_of(json::array()).find("expected an object") != std::string::npos);
}

TEST_CASE("hash ignores the output directory only") {
  RunConfig a = parse_config(station_json());
  RunConfig b = a;
  b.output.dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.experiment.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
  // Published FNV-1a test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("csv formatting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);

  nlohmann::ordered_json r;
  r["k"] = 3;
  r["x"] = 0.5;
  r["v"] = {1.5, 2.0};
  r["none"] = nullptr;
  r["s"] = "a,b";
  CHECK(csv_header(r) == "k,x,v,none,s");
  CHECK(csv_line(r) == "3,0.5,1.5;2,,\"a,b\"");
}

TEST_CASE("sample records carry provenance and omit timing by default") {
  PerfectSample ps;
  ps.state.elapsed_age = 0.25;
  ps.state.remaining = {0.5, 1.0};
  ps.kappa = 7;
  ps.tau = -2.0;
  ps.T = -1.5;
  ps.wall_ms = 12.0;
  RecordMeta meta{"00000000deadbeef", "1.2.3", 9, 4, 4, false};
  const auto j = sample_record(ps, meta);
  CHECK(j["occupancy"] == 2);
  CHECK(j["config_hash"] == "00000000deadbeef");
  CHECK(j["seed"] == 9);
  CHECK(j["version"] == "1.2.3");
  CHECK_FALSE(j.contains("wall_ms"));
  meta.timing = true;
  CHECK(sample_record(ps, meta)["wall_ms"] == 12.0);
  ps.tau.reset();
  CHECK(sample_record(ps, meta)["tau"].is_null());
}
