#include "perfsamp/forward_sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace perfsamp {

namespace {

struct Departure {
  double time;
  int route;
  bool operator>(const Departure& o) const { return time > o.time; }
};

struct BatchSums {
  std::vector<double> occupancy, full, route, arrivals, blocked;
};

}  // namespace

ForwardEstimate simulate_forward(const LossNetworkModel& model, const ForwardOptions& options,
                                 RngStream& stream) {
  const auto issues = validate_model(model);
  if (!issues.empty()) throw Error(issues.front().code, issues.front().message);
  if (!(options.horizon > 0) || options.batches < 2 || !(options.burn_in_fraction >= 0) ||
      !(options.burn_in_fraction < 1)) {
    throw Error(ErrorCode::InvalidModel, "forward simulation needs a horizon, burn-in < 1 and >= 2 batches");
  }
  const int J = model.stations(), L = model.routes();
  std::vector<DistributionSpec> inter;
  for (const auto& g : model.interarrival) inter.push_back(g.scaled(model.scale));

  std::vector<int> counts(L, 0);
  std::vector<double> next_arrival(L);
  for (int l = 0; l < L; ++l) next_arrival[l] = sample(inter[l], stream);
  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures;

  const double start = options.burn_in_fraction * options.horizon;
  const double width = (options.horizon - start) / options.batches;
  std::vector<BatchSums> batch(options.batches);
  for (auto& b : batch) {
    b.occupancy.assign(J, 0.0);
    b.full.assign(J, 0.0);
    b.route.assign(L, 0.0);
    b.arrivals.assign(L, 0.0);
    b.blocked.assign(L, 0.0);
  }
  const int pmf_cap = model.capacities[0] ? *model.capacities[0] : 64;
  std::vector<double> pmf(static_cast<std::size_t>(pmf_cap) + 1, 0.0);

  // Adds the current state held over [a, b) to the batches it overlaps.
  auto accumulate = [&](double a, double b) {
    a = std::max(a, start);
    if (!(b > a)) return;
    const auto q = station_occupancy(model, counts);
    while (a < b) {
      const int k = std::min(options.batches - 1, static_cast<int>((a - start) / width));
      const double end = k == options.batches - 1 ? b : std::min(b, start + (k + 1) * width);
      const double dt = end - a;
      for (int j = 0; j < J; ++j) {
        batch[k].occupancy[j] += q[j] * dt;
        if (model.capacities[j] && q[j] >= *model.capacities[j]) batch[k].full[j] += dt;
      }
      for (int l = 0; l < L; ++l) batch[k].route[l] += counts[l] * dt;
      pmf[std::min(q[0], pmf_cap)] += dt;
      a = end;
    }
  };

  ForwardEstimate out;
  double now = 0.0;
  while (true) {
    const int l = static_cast<int>(std::min_element(next_arrival.begin(), next_arrival.end()) -
                                   next_arrival.begin());
    const bool depart = !departures.empty() && departures.top().time <= next_arrival[l];
    const double t = std::min(options.horizon, depart ? departures.top().time : next_arrival[l]);
    accumulate(now, t);
    now = t;
    if (now >= options.horizon) break;
    if (depart) {
      --counts[departures.top().route];
      departures.pop();
      continue;
    }
    const auto q = station_occupancy(model, counts);
    bool admit = true;
    for (int j = 0; j < J; ++j) {
      if (model.incidence[l][j] && model.capacities[j] && q[j] >= *model.capacities[j]) admit = false;
    }
    if (now >= start) {
      const int k = std::min(options.batches - 1, static_cast<int>((now - start) / width));
      batch[k].arrivals[l] += 1;
      if (!admit) batch[k].blocked[l] += 1;
      ++out.arrivals;
    }
    if (admit) {
      ++counts[l];
      departures.push({now + sample(model.service[l], stream), l});
    }
    next_arrival[l] = now + sample(inter[l], stream);
  }

  auto ci_of = [&](auto value) {
    std::vector<double> v;
    for (const auto& b : batch) v.push_back(value(b));
    return mean_confidence_interval(v, 0.95);
  };
  for (int j = 0; j < J; ++j) {
    out.station_occupancy.push_back(ci_of([&](const BatchSums& b) { return b.occupancy[j] / width; }));
    out.station_full.push_back(ci_of([&](const BatchSums& b) { return b.full[j] / width; }));
  }
  for (int l = 0; l < L; ++l) {
    out.route_occupancy.push_back(ci_of([&](const BatchSums& b) { return b.route[l] / width; }));
    out.route_blocking.push_back(ci_of([&](const BatchSums& b) {
      return b.arrivals[l] > 0 ? b.blocked[l] / b.arrivals[l] : 0.0;
    }));
  }
  const double total = options.horizon - start;
  for (double& p : pmf) p /= total;
  out.occupancy_pmf = std::move(pmf);
  return out;
}

ForwardEstimate simulate_forward(const StationModel& model, const ForwardOptions& options,
                                 RngStream& stream) {
  return simulate_forward(single_station_network(model), options, stream);
}

}  // namespace perfsamp
