#include "perfsamp/coalescence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "perfsamp/error.hpp"

namespace perfsamp {

namespace {

// Sparse table for range minima of a fixed array.
class RangeMin {
 public:
  explicit RangeMin(const std::vector<int>& values) {
    table_.push_back(values);
    for (std::size_t w = 1; 2 * w <= values.size(); w *= 2) {
      const auto& prev = table_.back();
      std::vector<int> next(prev.size() - w);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = std::min(prev[i], prev[i + w]);
      table_.push_back(std::move(next));
    }
  }

  // Minimum over the closed index range [lo, hi].
  int min(std::size_t lo, std::size_t hi) const {
    std::size_t level = 0;
    while ((std::size_t{2} << level) <= hi - lo + 1) ++level;
    const auto& row = table_[level];
    return std::min(row[lo], row[hi + 1 - (std::size_t{1} << level)]);
  }

 private:
  std::vector<std::vector<int>> table_;
};

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

const WalkParams& cached_walk_params(const DistributionSpec& interarrival,
                                     const SamplerOptions& options) {
  using Key = std::tuple<std::string, double, double, int>;
  thread_local std::map<Key, WalkParams> cache;
  const Key key{interarrival.describe(), options.epsilon_fraction, options.m_fraction,
                static_cast<int>(options.heavy_tail)};
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, make_walk_params(interarrival, options.epsilon_fraction,
                                             options.m_fraction, options.heavy_tail))
             .first;
  }
  return it->second;
}

BackwardSampler::BackwardSampler(const DistributionSpec& interarrival,
                                 const DistributionSpec& service, const SamplerOptions& options,
                                 const RngStream& stream)
    : BackwardSampler(cached_walk_params(interarrival, options), service, stream) {}

BackwardSampler::BackwardSampler(const WalkParams& walk, const DistributionSpec& service,
                                 const RngStream& stream)
    : service_(service, walk.slope()),
      arrivals_(walk),
      service_stream_(stream.split(1)),
      arrival_stream_(stream.split(2)) {}

void BackwardSampler::extend() {
  auto lookup = [this](long n) { return service_.block_start_at_least(n, service_stream_); };
  arrivals_.extend(lookup, arrival_stream_);
}

long BackwardSampler::kappa() const {
  const auto& blocks = arrivals_.blocks().blocks;
  if (blocks.empty()) throw Error(ErrorCode::UncertifiedTime, "no block has been generated");
  return blocks.back().kappa;
}

double BackwardSampler::certified_from() const {
  const auto& blocks = arrivals_.blocks().blocks;
  if (blocks.empty()) throw Error(ErrorCode::UncertifiedTime, "no block has been generated");
  const long previous = blocks.size() == 1 ? 1 : blocks[blocks.size() - 2].kappa;
  return arrivals_.blocks().arrival(previous);
}

std::vector<MarkedPoint> BackwardSampler::points() const {
  const long last = kappa();
  const auto& ab = arrivals_.blocks();
  const auto& sb = service_.blocks();
  std::vector<MarkedPoint> out;
  out.reserve(static_cast<std::size_t>(last));
  for (long n = 1; n <= last; ++n) out.push_back({n, ab.arrival(n), sb.value(n)});
  return out;
}

long BackwardSampler::customers() const {
  return std::max(service_.blocks().simulated(),
                  static_cast<long>(arrivals_.blocks().arrivals.size()));
}

std::vector<std::string> BackwardSampler::check_invariants() const {
  auto bad = check_service_invariants(service_.blocks());
  const auto more = check_arrival_invariants(arrivals_.blocks(), service_.blocks().block_starts());
  bad.insert(bad.end(), more.begin(), more.end());
  return bad;
}

std::optional<Coalescence> scan_for_coalescence(const EventTimeline& timeline,
                                                const std::vector<int>& slack, bool strict,
                                                ScanOrder order,
                                                std::optional<double> scan_below) {
  const auto& events = timeline.events();
  if (slack.size() != events.size() + 1) {
    throw Error(ErrorCode::InvalidModel, "slack must cover every event plus the window start");
  }
  const RangeMin range(slack);
  auto try_candidate = [&](const EventTimeline::Event& e) -> std::optional<Coalescence> {
    if (e.arrival || (scan_below && !(e.time < *scan_below))) return std::nullopt;
    const double tau = e.time;
    const double r = timeline.max_remaining(tau);
    const bool near_enough = strict ? r < -tau : r <= -tau;
    if (!near_enough) return std::nullopt;
    const double T = tau + r;
    if (range.min(timeline.position(tau), timeline.position(T)) < 0) return std::nullopt;
    return Coalescence{tau, T};
  };
  if (order == ScanOrder::Nearest) {
    for (auto it = events.rbegin(); it != events.rend(); ++it) {
      if (auto c = try_candidate(*it)) return c;
    }
  } else {
    for (const auto& e : events) {
      if (auto c = try_candidate(e)) return c;
    }
  }
  return std::nullopt;
}

std::optional<Coalescence> detect_coalescence(const EventTimeline& timeline,
                                              std::optional<int> capacity, ScanOrder order,
                                              std::optional<double> scan_below) {
  std::vector<int> slack(timeline.events().size() + 1, 0);
  if (capacity) {
    for (std::size_t k = 0; k < slack.size(); ++k) slack[k] = *capacity - timeline.total_after(k);
  }
  return scan_for_coalescence(timeline, slack, true, order, scan_below);
}

ReplayResult replay_forward(const std::vector<std::vector<MarkedPoint>>& routes, double T,
                            double certified_from, const AdmissionRule& admit) {
  if (T < certified_from) throw Error(ErrorCode::UncertifiedTime, "replay starts before the window");
  if (T > 0) throw Error(ErrorCode::InvalidModel, "replay must start at or before 0");
  struct Ev {
    double time;
    bool arrival;
    int route;
    std::size_t slot;
  };
  const std::size_t L = routes.size();
  std::vector<std::vector<char>> in_loss(L);
  std::vector<int> loss(L, 0), inf(L, 0);
  std::vector<Ev> events;
  for (std::size_t l = 0; l < L; ++l) {
    in_loss[l].assign(routes[l].size(), 0);
    for (std::size_t i = 0; i < routes[l].size(); ++i) {
      const MarkedPoint& p = routes[l][i];
      const double d = p.departure();
      if (p.arrival > 0 || d <= T) continue;
      if (p.arrival <= T) {
        in_loss[l][i] = 1;
        ++loss[l];
        ++inf[l];
      } else {
        events.push_back({p.arrival, true, static_cast<int>(l), i});
      }
      if (d <= 0) events.push_back({d, false, static_cast<int>(l), i});
    }
  }
  std::sort(events.begin(), events.end(), [&](const Ev& a, const Ev& b) {
    const long ia = routes[a.route][a.slot].index, ib = routes[b.route][b.slot].index;
    return std::make_tuple(a.time, a.arrival, a.route, ia) <
           std::make_tuple(b.time, b.arrival, b.route, ib);
  });

  ReplayResult out;
  out.admitted.resize(L);
  out.blocked.resize(L);
  for (const Ev& e : events) {
    const long index = routes[e.route][e.slot].index;
    if (e.arrival) {
      ++inf[e.route];
      if (admit(loss, e.route)) {
        in_loss[e.route][e.slot] = 1;
        ++loss[e.route];
        out.admitted[e.route].push_back(index);
      } else {
        out.blocked[e.route].push_back(index);
      }
    } else {
      --inf[e.route];
      if (in_loss[e.route][e.slot]) {
        in_loss[e.route][e.slot] = 0;
        --loss[e.route];
      }
    }
    if (loss[e.route] > inf[e.route]) {
      throw Error(ErrorCode::GuardViolation, "loss occupancy exceeded the dominating system");
    }
  }

  for (std::size_t l = 0; l < L; ++l) {
    SystemState s;
    double last_arrival = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < routes[l].size(); ++i) {
      const MarkedPoint& p = routes[l][i];
      if (p.arrival <= 0) last_arrival = std::max(last_arrival, p.arrival);
      if (in_loss[l][i]) s.remaining.push_back(p.departure());
    }
    s.elapsed_age = -last_arrival;
    std::sort(s.remaining.begin(), s.remaining.end());
    out.routes.push_back(std::move(s));
  }
  return out;
}

SystemState replay_loss_forward(const std::vector<MarkedPoint>& points, double T,
                                std::optional<int> capacity, double certified_from) {
  auto admit = [&](const std::vector<int>& counts, int) { return !capacity || counts[0] < *capacity; };
  return replay_forward({points}, T, certified_from, admit).routes.front();
}

PerfectSample perfect_sample_infinite(const StationModel& model, const RngStream& stream) {
  const auto start = Clock::now();
  BackwardSampler b(model.scaled_interarrival(), model.service, model.options, stream.split(0));
  b.extend();
  if (model.options.verify_invariants || b.walk().heavy_tail) {
    const auto bad = b.check_invariants();
    if (!bad.empty()) throw Error(ErrorCode::GuardViolation, "record invariant: " + bad.front());
  }
  PerfectSample out;
  out.state = state_at(b.points(), 0.0, b.certified_from());
  out.kappa = b.kappa();
  out.customers = b.customers();
  out.blocks_used = b.blocks();
  out.rejections = b.rejections();
  out.wall_ms = elapsed_ms(start);
  return out;
}

PerfectSample perfect_sample_loss(const StationModel& model, const RngStream& stream) {
  if (model.capacity && *model.capacity < 1) {
    throw Error(ErrorCode::InvalidModel, "capacity must be at least 1");
  }
  const auto start = Clock::now();
  BackwardSampler b(model.scaled_interarrival(), model.service, model.options, stream.split(0));
  std::optional<double> scanned_to;
  while (true) {
    if (b.blocks() >= model.options.block_budget) {
      throw Error(ErrorCode::BlockBudgetExceeded,
                  "no coalescence within " + std::to_string(model.options.block_budget) +
                      " blocks");
    }
    b.extend();
    const double lo = b.certified_from();
    const auto points = b.points();
    const EventTimeline tl = timeline(points, lo);
    const auto c = detect_coalescence(tl, model.capacity, model.options.scan_order, scanned_to);
    scanned_to = lo;
    if (!c) continue;

    // Recheck both conditions from scratch.
    const double r = state_at(points, c->tau, lo).max_remaining();
    if (!(r < -c->tau) || c->tau + r != c->T ||
        (model.capacity && tl.max_occupancy(c->tau, c->T) > *model.capacity)) {
      throw Error(ErrorCode::GuardViolation, "coalescence conditions failed the recheck");
    }
    if (model.options.verify_invariants || b.walk().heavy_tail) {
      const auto bad = b.check_invariants();
      if (!bad.empty()) throw Error(ErrorCode::GuardViolation, "record invariant: " + bad.front());
    }

    PerfectSample out;
    out.state = replay_loss_forward(points, c->T, model.capacity, lo);
    out.kappa = b.kappa();
    out.tau = c->tau;
    out.T = c->T;
    out.customers = b.customers();
    out.blocks_used = b.blocks();
    out.rejections = b.rejections();
    out.wall_ms = elapsed_ms(start);
    return out;
  }
}

}  // namespace perfsamp
