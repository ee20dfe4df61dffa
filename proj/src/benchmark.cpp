#include "perfsamp/benchmark.hpp"

#include <cmath>

#include "perfsamp/error.hpp"

namespace perfsamp {

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::INF: return "INF";
    case Regime::QD: return "QD";
    case Regime::QED: return "QED";
  }
  return "?";
}

std::optional<Regime> regime_from_string(const std::string& name) {
  if (name == "INF") return Regime::INF;
  if (name == "QD") return Regime::QD;
  if (name == "QED") return Regime::QED;
  return std::nullopt;
}

std::optional<int> regime_capacity(Regime regime, int s, double beta) {
  switch (regime) {
    case Regime::INF: return std::nullopt;
    case Regime::QD: return s;
    case Regime::QED: return static_cast<int>(std::lround(s + beta * std::sqrt(s)));
  }
  return std::nullopt;
}

ScalingTable run_scaling_benchmark(const StationModel& base, Regime regime,
                                   const std::vector<int>& scales, int replications,
                                   std::uint64_t seed, double beta) {
  if (replications < 30) throw Error(ErrorCode::InvalidModel, "need at least 30 replications per scale");
  if (scales.size() < 2) throw Error(ErrorCode::InvalidModel, "need at least two scales to fit a slope");
  ScalingTable table;
  table.regime = regime;
  const RngStream root = create_stream(seed, 0);
  std::vector<double> logs, log_kappa, log_tau, log_customers, log_wall;
  for (int s : scales) {
    if (s < 1) throw Error(ErrorCode::InvalidModel, "scales must be positive");
    StationModel model = base;
    model.scale = s;
    model.capacity = regime_capacity(regime, s, beta);
    const RngStream scale_stream = root.split(static_cast<std::uint64_t>(s));
    std::vector<double> kappa, tau, customers, wall;
    for (int r = 0; r < replications; ++r) {
      const RngStream stream = scale_stream.split(static_cast<std::uint64_t>(r));
      const PerfectSample ps = regime == Regime::INF ? perfect_sample_infinite(model, stream)
                                                     : perfect_sample_loss(model, stream);
      kappa.push_back(static_cast<double>(ps.kappa));
      if (ps.tau) tau.push_back(-*ps.tau);
      customers.push_back(static_cast<double>(ps.customers));
      wall.push_back(ps.wall_ms);
    }
    ScalingRow row;
    row.scale = s;
    row.capacity = model.capacity.value_or(0);
    row.replications = replications;
    row.kappa = mean_confidence_interval(kappa);
    if (!tau.empty()) row.tau = mean_confidence_interval(tau);
    row.customers = mean_confidence_interval(customers);
    row.wall_ms = mean_confidence_interval(wall);
    logs.push_back(std::log(s));
    log_kappa.push_back(std::log(row.kappa.mean));
    if (row.tau) log_tau.push_back(std::log(row.tau->mean));
    log_customers.push_back(std::log(row.customers.mean));
    log_wall.push_back(std::log(std::max(row.wall_ms.mean, 1e-6)));
    table.rows.push_back(std::move(row));
  }
  table.kappa_slope = least_squares(logs, log_kappa).slope;
  if (log_tau.size() == logs.size()) table.tau_slope = least_squares(logs, log_tau).slope;
  table.customers_slope = least_squares(logs, log_customers).slope;
  table.wall_slope = least_squares(logs, log_wall).slope;
  return table;
}

}  // namespace perfsamp
