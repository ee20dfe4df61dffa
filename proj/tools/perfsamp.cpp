// perfsamp: command line front end for the perfect samplers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "perfsamp/benchmark.hpp"
#include "perfsamp/config.hpp"
#include "perfsamp/error.hpp"
#include "perfsamp/forward_sim.hpp"
#include "perfsamp/records.hpp"
#include "perfsamp/validation.hpp"

#ifndef PERFSAMP_VERSION_STRING
#define PERFSAMP_VERSION_STRING "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace perfsamp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;

struct CommonFlags {
  std::string config;
  std::optional<long> n;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  bool timing = false;
};

struct Run {
  RunConfig cfg;
  fs::path dir;
  std::string hash;
  bool timing = false;
};

// Raised after diagnostics.json has been written.
struct BudgetExit {};

fs::path output_dir(const CommonFlags& flags, const RunConfig& cfg) {
  if (!flags.out.empty()) return flags.out;
  if (!cfg.output.dir.empty()) return cfg.output.dir;
  if (const char* env = std::getenv("PERFSAMP_OUTPUT_DIR"); env && *env) return env;
  return "runs";
}

Run prepare(const CommonFlags& flags) {
  Run run;
  run.cfg = load_config(flags.config);
  if (flags.n) {
    if (*flags.n < 1) throw Error(ErrorCode::ConfigError, "--n: must be at least 1");
    run.cfg.experiment.n = *flags.n;
  }
  if (flags.seed) run.cfg.experiment.seed = *flags.seed;
  if (!flags.format.empty()) run.cfg.output.format = flags.format;
  run.dir = output_dir(flags, run.cfg);
  run.cfg.output.dir = run.dir.string();
  run.hash = config_hash(run.cfg);
  run.timing = flags.timing;
  fs::create_directories(run.dir);
  return run;
}

RecordMeta meta_for(const Run& run, long replication, std::uint64_t stream_id) {
  RecordMeta m;
  m.config_hash = run.hash;
  m.version = PERFSAMP_VERSION_STRING;
  m.seed = run.cfg.experiment.seed;
  m.stream_id = stream_id;
  m.replication = replication;
  m.timing = run.timing;
  return m;
}

ordered_json provenance(const Run& run) {
  return {{"config_hash", run.hash},
          {"seed", run.cfg.experiment.seed},
          {"version", PERFSAMP_VERSION_STRING},
          {"config", to_json(run.cfg)}};
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

[[noreturn]] void budget_failure(const Run& run, const Error& e, long replication, std::uint64_t stream_id) {
  ordered_json d = provenance(run);
  d["error"] = std::string(to_string(e.code()));
  d["message"] = e.what();
  d["replication"] = replication;
  d["stream_id"] = stream_id;
  d["block_budget"] = run.cfg.network.options.block_budget;
  write_json(run.dir / "diagnostics.json", d);
  std::cerr << "perfsamp: " << e.what() << " (replication " << replication << ", see "
            << (run.dir / "diagnostics.json").string() << ")\n";
  throw BudgetExit{};
}

// Writes one record per line, either as JSON or CSV with a header row.
class RecordWriter {
 public:
  RecordWriter(const fs::path& stem, const std::string& format)
      : csv_(format == "csv"), path_(stem.string() + (csv_ ? ".csv" : ".jsonl")), out_(path_, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path_);
  }
  void write(const ordered_json& record) {
    if (csv_) {
      if (!header_) out_ << csv_header(record) << "\r\n";
      header_ = true;
      out_ << csv_line(record) << "\r\n";
    } else {
      out_ << record.dump() << '\n';
    }
    out_.flush();
  }
  const std::string& path() const { return path_; }

 private:
  bool csv_;
  std::string path_;
  std::ofstream out_;
  bool header_ = false;
};

// Replication i always uses stream (seed, i), so a single-route network and
// the station it represents consume identical randomness.
RngStream replication_stream(const Run& run, long i) {
  return create_stream(run.cfg.experiment.seed, static_cast<std::uint64_t>(i));
}

struct StationRuns {
  std::vector<int> occupancy;
  std::vector<double> kappa;
  std::vector<double> tau;
};

StationRuns run_station(const Run& run, bool infinite, RecordWriter* writer) {
  StationModel model = run.cfg.station;
  if (infinite) model.capacity.reset();
  StationRuns r;
  for (long i = 0; i < run.cfg.experiment.n; ++i) {
    const RngStream stream = replication_stream(run, i);
    PerfectSample ps;
    try {
      ps = infinite ? perfect_sample_infinite(model, stream) : perfect_sample_loss(model, stream);
    } catch (const Error& e) {
      if (e.is_budget_failure()) budget_failure(run, e, i, stream.stream_id());
      throw;
    }
    r.occupancy.push_back(ps.state.occupancy());
    r.kappa.push_back(static_cast<double>(ps.kappa));
    if (ps.tau) r.tau.push_back(-*ps.tau);
    if (writer) writer->write(sample_record(ps, meta_for(run, i, stream.stream_id())));
  }
  return r;
}

struct NetworkRuns {
  std::vector<std::vector<int>> stations;  // [sample][station]
  std::vector<std::vector<int>> routes;    // [sample][route]
};

NetworkRuns run_network(const Run& run, RecordWriter* writer) {
  NetworkRuns r;
  for (long i = 0; i < run.cfg.experiment.n; ++i) {
    const RngStream stream = replication_stream(run, i);
    NetworkSample ns;
    try {
      ns = perfect_sample_network(run.cfg.network, stream);
    } catch (const Error& e) {
      if (e.is_budget_failure()) budget_failure(run, e, i, stream.stream_id());
      throw;
    }
    r.stations.push_back(ns.station_occupancy);
    r.routes.push_back(ns.route_counts());
    if (writer) writer->write(network_record(ns, meta_for(run, i, stream.stream_id())));
  }
  return r;
}

std::vector<double> to_double(const std::vector<int>& v) { return {v.begin(), v.end()}; }

ordered_json ci_json(const MeanCi& ci) {
  return {{"mean", ci.mean}, {"half_width", ci.half_width}, {"std_error", ci.std_error}, {"n", ci.n}};
}

ordered_json gof_json(const GofReport& g) {
  ordered_json j{{"test", g.test}, {"statistic", g.statistic}, {"dof", g.dof}, {"p_value", g.p_value}};
  j["bins"] = ordered_json::array();
  for (const auto& b : g.bins) {
    j["bins"].push_back({{"label", b.label}, {"observed", b.observed}, {"expected", b.expected}});
  }
  j["pooling_note"] = g.pooling_note;
  return j;
}

void require_station(const Run& run, const std::string& what) {
  if (run.cfg.type != ModelType::Station) throw Error(ErrorCode::ConfigError, "model.type: " + what + " needs a station model");
}

void require_poisson_input(const std::vector<DistributionSpec>& inter, const std::string& what) {
  for (const auto& g : inter) {
    if (g.family() != Family::Exponential) {
      throw Error(ErrorCode::ConfigError, "model: the " + what + " oracle needs exponential interarrival times");
    }
  }
}

double offered_load(const DistributionSpec& inter, const DistributionSpec& service, int scale) {
  return service.mean() / inter.scaled(scale).mean();
}

int cmd_sample(const CommonFlags& flags, const std::string& name) {
  Run run = prepare(flags);
  RecordWriter writer(run.dir / name, run.cfg.output.format);
  ordered_json summary = provenance(run);
  summary["command"] = name;
  summary["n"] = run.cfg.experiment.n;
  summary["records"] = fs::path(writer.path()).filename().string();
  std::string line;
  if (name == "sample-network") {
    const NetworkRuns r = run_network(run, &writer);
    ordered_json means = ordered_json::array();
    line = "mean_station_occupancy=";
    for (int j = 0; j < run.cfg.network.stations(); ++j) {
      std::vector<double> v;
      for (const auto& s : r.stations) v.push_back(s[j]);
      const MeanCi ci = mean_confidence_interval(v);
      means.push_back(ci_json(ci));
      line += (j ? ";" : "") + format_number(ci.mean);
    }
    summary["station_occupancy"] = means;
  } else {
    require_station(run, name);
    const bool infinite = name == "sample-infinite";
    if (!infinite && !run.cfg.station.capacity) {
      throw Error(ErrorCode::ConfigError, "model.capacity: sample-loss needs a finite capacity");
    }
    const StationRuns r = run_station(run, infinite, &writer);
    const MeanCi occ = mean_confidence_interval(to_double(r.occupancy));
    summary["occupancy"] = ci_json(occ);
    summary["kappa"] = ci_json(mean_confidence_interval(r.kappa));
    if (!r.tau.empty()) summary["abs_tau"] = ci_json(mean_confidence_interval(r.tau));
    line = "mean_occupancy=" + format_number(occ.mean);
  }
  write_json(run.dir / "summary.json", summary);
  std::cout << name << ": n=" << run.cfg.experiment.n << ' ' << line << " out=" << writer.path() << '\n';
  return 0;
}

int cmd_validate(const CommonFlags& flags, const std::string& oracle) {
  Run run = prepare(flags);
  ordered_json report = provenance(run);
  report["command"] = "validate";
  report["oracle"] = oracle;
  report["n"] = run.cfg.experiment.n;
  const auto n = static_cast<double>(run.cfg.experiment.n);
  std::string line;

  if (oracle == "poisson" || oracle == "erlang") {
    require_station(run, oracle + " validation");
    const StationModel& m = run.cfg.station;
    require_poisson_input({m.interarrival}, oracle);
    const double a = offered_load(m.interarrival, m.service, m.scale);
    const bool infinite = oracle == "poisson";
    if (!infinite && !m.capacity) throw Error(ErrorCode::ConfigError, "model.capacity: the erlang oracle needs a finite capacity");
    const StationRuns r = run_station(run, infinite, nullptr);
    std::vector<double> pmf;
    if (infinite) {
      const int k_max = static_cast<int>(std::ceil(a + 10 * std::sqrt(a) + 10));
      pmf = poisson_pmf_with_tail(a, k_max + 1);
    } else {
      const auto eb = erlang_b_distribution(*m.capacity, a);
      pmf = eb.pmf;
      const double full = std::count(r.occupancy.begin(), r.occupancy.end(), *m.capacity) / n;
      report["time_congestion"] = full;
      report["erlang_b"] = eb.blocking;
    }
    std::vector<int> capped = r.occupancy;
    for (int& k : capped) k = std::min<int>(k, static_cast<int>(pmf.size()) - 1);
    const auto emp = empirical_pmf(capped, pmf.size());
    std::vector<double> observed;
    for (double p : emp) observed.push_back(p * n);
    const GofReport g = chi_square_test(observed, pmf);
    report["offered_load"] = a;
    report["chi_square"] = gof_json(g);
    report["total_variation"] = total_variation(emp, pmf);
    line = "p_value=" + format_number(g.p_value) + " tv=" + format_number(total_variation(emp, pmf));
  } else if (oracle == "product-form") {
    const LossNetworkModel& m = run.cfg.network;
    require_poisson_input(m.interarrival, oracle);
    std::vector<int> caps;
    for (std::size_t j = 0; j < m.capacities.size(); ++j) {
      if (!m.capacities[j]) {
        throw Error(ErrorCode::ConfigError, "model.stations[" + std::to_string(j) + "].capacity: the product-form oracle needs finite capacities");
      }
      caps.push_back(*m.capacities[j]);
    }
    std::vector<double> loads;
    for (int l = 0; l < m.routes(); ++l) loads.push_back(offered_load(m.interarrival[l], m.service[l], m.scale));
    const auto states = product_form_distribution(m.incidence, caps, loads);
    std::map<std::vector<int>, std::size_t> index;
    std::vector<double> pmf;
    for (const auto& st : states) {
      index.emplace(st.counts, pmf.size());
      pmf.push_back(st.probability);
    }
    const NetworkRuns r = run_network(run, nullptr);
    std::vector<double> observed(pmf.size(), 0.0);
    for (const auto& counts : r.routes) {
      const auto it = index.find(counts);
      if (it == index.end()) throw Error(ErrorCode::GuardViolation, "sampled an infeasible network state");
      observed[it->second] += 1;
    }
    std::vector<double> emp;
    for (double o : observed) emp.push_back(o / n);
    const GofReport g = chi_square_test(observed, pmf);
    report["loads"] = loads;
    report["states"] = pmf.size();
    report["chi_square"] = gof_json(g);
    report["total_variation"] = total_variation(emp, pmf);
    line = "p_value=" + format_number(g.p_value) + " tv=" + format_number(total_variation(emp, pmf));
  } else {  // forward
    const LossNetworkModel& m = run.cfg.network;
    ForwardOptions fo;
    fo.horizon = run.cfg.experiment.forward_horizon;
    fo.burn_in_fraction = run.cfg.experiment.burn_in_fraction;
    fo.batches = run.cfg.experiment.batches;
    RngStream fstream = create_stream(run.cfg.experiment.seed, derive_stream_id(1, 0));
    const ForwardEstimate fwd = simulate_forward(m, fo, fstream);
    std::vector<std::vector<int>> per_sample;
    if (run.cfg.type == ModelType::Station) {
      const StationRuns r = run_station(run, !run.cfg.station.capacity, nullptr);
      for (int k : r.occupancy) per_sample.push_back({k});
    } else {
      per_sample = run_network(run, nullptr).stations;
    }
    bool all_overlap = true;
    ordered_json stations = ordered_json::array();
    for (int j = 0; j < m.stations(); ++j) {
      std::vector<double> occ, full;
      for (const auto& s : per_sample) {
        occ.push_back(s[j]);
        full.push_back(m.capacities[j] && s[j] >= *m.capacities[j] ? 1.0 : 0.0);
      }
      const MeanCi po = mean_confidence_interval(occ);
      ordered_json sj{{"perfect_occupancy", ci_json(po)},
                      {"forward_occupancy", ci_json(fwd.station_occupancy[j])},
                      {"occupancy_overlap", po.overlaps(fwd.station_occupancy[j])}};
      all_overlap = all_overlap && po.overlaps(fwd.station_occupancy[j]);
      if (m.capacities[j]) {
        const MeanCi pf = mean_confidence_interval(full);
        sj["perfect_full"] = ci_json(pf);
        sj["forward_full"] = ci_json(fwd.station_full[j]);
        sj["full_overlap"] = pf.overlaps(fwd.station_full[j]);
        all_overlap = all_overlap && pf.overlaps(fwd.station_full[j]);
      }
      stations.push_back(std::move(sj));
    }
    ordered_json blocking = ordered_json::array();
    for (const auto& b : fwd.route_blocking) blocking.push_back(ci_json(b));
    std::vector<int> first;
    for (const auto& s : per_sample) first.push_back(std::min<int>(s[0], static_cast<int>(fwd.occupancy_pmf.size()) - 1));
    const double tv = total_variation(empirical_pmf(first, fwd.occupancy_pmf.size()), fwd.occupancy_pmf);
    report["forward_stream_id"] = fstream.stream_id();
    report["forward_arrivals"] = fwd.arrivals;
    report["stations"] = stations;
    report["forward_call_blocking"] = blocking;
    report["station0_total_variation"] = tv;
    report["all_intervals_overlap"] = all_overlap;
    line = std::string("overlap=") + (all_overlap ? "yes" : "no") + " tv=" + format_number(tv);
  }
  const fs::path path = run.dir / ("validate-" + oracle + ".json");
  write_json(path, report);
  std::cout << "validate " << oracle << ": n=" << run.cfg.experiment.n << ' ' << line << " out=" << path.string() << '\n';
  return 0;
}

int cmd_bench(const CommonFlags& flags, const std::string& regime_flag, std::optional<int> replications) {
  Run run = prepare(flags);
  require_station(run, "bench");
  if (!regime_flag.empty()) {
    if (!regime_from_string(regime_flag)) throw Error(ErrorCode::ConfigError, "--regime: expected INF, QD or QED");
    run.cfg.experiment.regime = regime_flag;
  }
  if (replications) run.cfg.experiment.replications = *replications;
  run.hash = config_hash(run.cfg);
  const Regime regime = *regime_from_string(run.cfg.experiment.regime);
  ScalingTable t;
  try {
    t = run_scaling_benchmark(run.cfg.station, regime, run.cfg.experiment.scales,
                              run.cfg.experiment.replications, run.cfg.experiment.seed, run.cfg.experiment.beta);
  } catch (const Error& e) {
    if (e.is_budget_failure()) budget_failure(run, e, -1, 0);
    throw;
  }
  ordered_json rows = ordered_json::array();
  for (const auto& r : t.rows) {
    ordered_json j{{"scale", r.scale},
                   {"capacity", r.capacity ? ordered_json(r.capacity) : ordered_json(nullptr)},
                   {"replications", r.replications},
                   {"kappa_mean", r.kappa.mean},
                   {"kappa_se", r.kappa.std_error},
                   {"abs_tau_mean", r.tau ? ordered_json(r.tau->mean) : ordered_json(nullptr)},
                   {"abs_tau_se", r.tau ? ordered_json(r.tau->std_error) : ordered_json(nullptr)},
                   {"customers_mean", r.customers.mean},
                   {"customers_se", r.customers.std_error}};
    if (run.timing) {
      j["wall_ms_mean"] = r.wall_ms.mean;
      j["wall_ms_se"] = r.wall_ms.std_error;
    }
    rows.push_back(std::move(j));
  }
  ordered_json summary = provenance(run);
  summary["command"] = "bench";
  summary["regime"] = to_string(regime);
  summary["kappa_slope"] = t.kappa_slope;
  summary["abs_tau_slope"] = t.tau_slope ? ordered_json(*t.tau_slope) : ordered_json(nullptr);
  summary["customers_slope"] = t.customers_slope;
  if (run.timing) summary["wall_ms_slope"] = t.wall_slope;
  std::string table;
  if (run.cfg.output.format == "csv") {
    table = (run.dir / "bench.csv").string();
    std::ofstream out(table, std::ios::binary);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == 0) out << csv_header(rows[i]) << "\r\n";
      out << csv_line(rows[i]) << "\r\n";
    }
  } else {
    table = (run.dir / "bench.jsonl").string();
    std::ofstream out(table, std::ios::binary);
    for (const auto& r : rows) out << r.dump() << '\n';
  }
  summary["table"] = fs::path(table).filename().string();
  write_json(run.dir / "summary.json", summary);
  std::cout << "bench " << to_string(regime) << ": kappa_slope=" << format_number(t.kappa_slope);
  if (t.tau_slope) std::cout << " tau_slope=" << format_number(*t.tau_slope);
  std::cout << " out=" << table << '\n';
  return 0;
}

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
  sub->add_option("--n", flags.n, "number of samples (overrides experiment.n)");
  sub->add_option("--seed", flags.seed, "master seed (overrides experiment.seed)");
  sub->add_option("--out", flags.out, "output directory (default: output.dir, $PERFSAMP_OUTPUT_DIR, runs)");
  sub->add_option("--format", flags.format, "record format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_flag("--timing", flags.timing, "include wall-clock times in the output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perfect sampling of GI/GI/infinity, GI/GI/C/C and loss network stationary states"};
  app.set_version_flag("--version", PERFSAMP_VERSION_STRING);
  app.require_subcommand(1);

  CommonFlags flags;
  std::string oracle, regime;
  std::optional<int> replications;
  auto* inf = app.add_subcommand("sample-infinite", "sample the infinite-server station");
  auto* loss = app.add_subcommand("sample-loss", "sample the C-server loss station");
  auto* net = app.add_subcommand("sample-network", "sample a loss network");
  auto* val = app.add_subcommand("validate", "compare samples with an exact or simulated reference");
  auto* bench = app.add_subcommand("bench", "scaling benchmark over experiment.scales");
  for (auto* sub : {inf, loss, net, val, bench}) add_common(sub, flags);
  val->add_option("--oracle", oracle, "reference law")
      ->required()
      ->check(CLI::IsMember({"erlang", "poisson", "product-form", "forward"}));
  bench->add_option("--regime", regime, "INF, QD or QED (overrides experiment.regime)");
  bench->add_option("--replications", replications, "replications per scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*inf) return cmd_sample(flags, "sample-infinite");
    if (*loss) return cmd_sample(flags, "sample-loss");
    if (*net) return cmd_sample(flags, "sample-network");
    if (*val) return cmd_validate(flags, oracle);
    if (*bench) return cmd_bench(flags, regime, replications);
  } catch (const BudgetExit&) {
    return kExitBudget;
  } catch (const Error& e) {
    std::cerr << "perfsamp: " << e.what() << '\n';
    if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::InvalidModel ||
        e.code() == ErrorCode::NoRoot || e.code() == ErrorCode::StateSpaceTooLarge) {
      return kExitConfig;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "perfsamp: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
