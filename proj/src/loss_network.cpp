#include "perfsamp/loss_network.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace perfsamp {

std::vector<ModelIssue> validate_model(const LossNetworkModel& model) {
  std::vector<ModelIssue> issues;
  auto add = [&](ErrorCode code, std::string msg) { issues.push_back({code, std::move(msg)}); };
  const int J = model.stations(), L = model.routes();
  if (J < 1) add(ErrorCode::InvalidModel, "the network needs at least one station");
  if (L < 1) add(ErrorCode::InvalidModel, "the network needs at least one route");
  if (model.scale < 1) add(ErrorCode::InvalidModel, "scale must be a positive integer");
  for (int j = 0; j < J; ++j) {
    if (model.capacities[j] && *model.capacities[j] < 1) {
      add(ErrorCode::InvalidModel, "station " + std::to_string(j) + " has capacity below 1");
    }
  }
  if (static_cast<int>(model.interarrival.size()) != L ||
      static_cast<int>(model.service.size()) != L) {
    add(ErrorCode::InvalidModel, "every route needs an interarrival and a service law");
    return issues;
  }
  for (int l = 0; l < L; ++l) {
    const std::string route = "route " + std::to_string(l);
    const auto& row = model.incidence[l];
    if (static_cast<int>(row.size()) != J) {
      add(ErrorCode::InvalidModel, route + " has " + std::to_string(row.size()) +
                                       " incidence entries for " + std::to_string(J) + " stations");
      continue;
    }
    if (std::any_of(row.begin(), row.end(), [](int x) { return x != 0 && x != 1; })) {
      add(ErrorCode::InvalidModel, route + " has an incidence entry other than 0 or 1");
    }
    if (std::none_of(row.begin(), row.end(), [](int x) { return x == 1; })) {
      add(ErrorCode::InvalidModel, route + " uses no station");
    }
    for (const auto* law : {&model.interarrival[l], &model.service[l]}) {
      if (!std::isfinite(law->mean())) add(ErrorCode::InvalidModel, route + ": infinite mean");
    }
    try {
      cached_walk_params(model.interarrival[l].scaled(model.scale), model.options);
    } catch (const Error& e) {
      add(e.code(), route + ": " + e.what());
    }
  }
  return issues;
}

LossNetworkModel single_station_network(const StationModel& station) {
  LossNetworkModel m;
  m.capacities = {station.capacity};
  m.incidence = {{1}};
  m.interarrival = {station.interarrival};
  m.service = {station.service};
  m.scale = station.scale;
  m.options = station.options;
  return m;
}

std::vector<int> station_occupancy(const LossNetworkModel& model, const std::vector<int>& counts) {
  std::vector<int> q(static_cast<std::size_t>(model.stations()), 0);
  for (int l = 0; l < model.routes(); ++l) {
    for (int j = 0; j < model.stations(); ++j) q[j] += counts[l] * model.incidence[l][j];
  }
  return q;
}

std::optional<Coalescence> detect_network_coalescence(const EventTimeline& timeline,
                                                      const LossNetworkModel& model,
                                                      ScanOrder order,
                                                      std::optional<double> scan_below) {
  const std::size_t events = timeline.events().size();
  std::vector<int> counts(static_cast<std::size_t>(model.routes()));
  std::vector<int> slack(events + 1);
  for (std::size_t k = 0; k <= events; ++k) {
    for (int l = 0; l < model.routes(); ++l) counts[l] = timeline.route_after(k, l);
    const auto q = station_occupancy(model, counts);
    int spare = 0;
    for (int j = 0; j < model.stations(); ++j) {
      if (model.capacities[j]) spare = std::min(spare, *model.capacities[j] - q[j]);
    }
    // Only the sign matters to the scan, so unlimited stations count as 0.
    slack[k] = spare;
  }
  return scan_for_coalescence(timeline, slack, false, order, scan_below);
}

std::vector<int> NetworkSample::route_counts() const {
  std::vector<int> n;
  for (const auto& r : routes) n.push_back(r.occupancy());
  return n;
}

NetworkSample perfect_sample_network(const LossNetworkModel& model, const RngStream& stream) {
  const auto issues = validate_model(model);
  if (!issues.empty()) throw Error(issues.front().code, issues.front().message);
  const auto start = std::chrono::steady_clock::now();
  const int L = model.routes();
  std::vector<BackwardSampler> samplers;
  samplers.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    samplers.emplace_back(model.interarrival[l].scaled(model.scale), model.service[l],
                          model.options, stream.split(static_cast<std::uint64_t>(l)));
    samplers.back().extend();
  }
  auto shallowest = [&] {
    int best = 0;
    for (int l = 1; l < L; ++l) {
      if (samplers[l].certified_from() > samplers[best].certified_from()) best = l;
    }
    return best;
  };

  std::optional<double> scanned_to;
  while (true) {
    const int l0 = shallowest();
    const double lo = samplers[l0].certified_from();
    if (!scanned_to || lo < *scanned_to) {
      std::vector<std::vector<MarkedPoint>> points;
      for (const auto& s : samplers) points.push_back(s.points());
      const EventTimeline tl(points, lo);
      const auto c = detect_network_coalescence(tl, model, model.options.scan_order, scanned_to);
      scanned_to = lo;
      if (c) {
        if (model.options.verify_invariants ||
            std::any_of(samplers.begin(), samplers.end(),
                        [](const BackwardSampler& s) { return s.walk().heavy_tail; })) {
          for (const auto& s : samplers) {
            const auto bad = s.check_invariants();
            if (!bad.empty()) {
              throw Error(ErrorCode::GuardViolation, "record invariant: " + bad.front());
            }
          }
        }
        auto admit = [&](const std::vector<int>& counts, int route) {
          const auto q = station_occupancy(model, counts);
          for (int j = 0; j < model.stations(); ++j) {
            if (model.incidence[route][j] && model.capacities[j] && q[j] >= *model.capacities[j]) {
              return false;
            }
          }
          return true;
        };
        const auto replay = replay_forward(points, c->T, lo, admit);
        NetworkSample out;
        out.routes = replay.routes;
        out.station_occupancy = station_occupancy(model, out.route_counts());
        for (int j = 0; j < model.stations(); ++j) {
          if (model.capacities[j] && out.station_occupancy[j] > *model.capacities[j]) {
            throw Error(ErrorCode::GuardViolation, "station over capacity at time 0");
          }
        }
        out.tau = c->tau;
        out.T = c->T;
        for (const auto& s : samplers) {
          out.kappas.push_back(s.kappa());
          out.customers += s.customers();
          out.blocks_used += s.blocks();
          out.rejections += s.rejections();
        }
        out.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        return out;
      }
    }
    if (samplers[l0].blocks() >= model.options.block_budget) {
      throw Error(ErrorCode::BlockBudgetExceeded,
                  "no coalescence within " + std::to_string(model.options.block_budget) +
                      " blocks on route " + std::to_string(l0));
    }
    samplers[l0].extend();
  }
}

}  // namespace perfsamp
