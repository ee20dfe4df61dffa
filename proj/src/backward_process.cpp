#include "perfsamp/backward_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "perfsamp/error.hpp"

namespace perfsamp {

int SystemState::count_above(double y) const {
  const auto it = std::upper_bound(remaining.begin(), remaining.end(), y);
  return static_cast<int>(remaining.end() - it);
}

SystemState state_at(const std::vector<MarkedPoint>& points, double t, double certified_from) {
  if (t < certified_from) {
    throw Error(ErrorCode::UncertifiedTime, "time lies before the certified window");
  }
  SystemState s;
  double last_arrival = -std::numeric_limits<double>::infinity();
  for (const MarkedPoint& p : points) {
    if (p.arrival > t) continue;
    last_arrival = std::max(last_arrival, p.arrival);
    if (t < p.departure()) s.remaining.push_back(p.departure() - t);
  }
  if (!std::isfinite(last_arrival)) {
    throw Error(ErrorCode::UncertifiedTime, "no arrival at or before the requested time");
  }
  s.elapsed_age = t - last_arrival;
  std::sort(s.remaining.begin(), s.remaining.end());
  return s;
}

EventTimeline::EventTimeline(const std::vector<std::vector<MarkedPoint>>& routes, double t_lo)
    : t_lo_(t_lo), routes_(static_cast<int>(routes.size())) {
  if (!(t_lo < 0)) throw Error(ErrorCode::UncertifiedTime, "window must start before 0");
  const auto L = static_cast<std::size_t>(routes_);
  std::vector<int> counts(L, 0);
  std::multiset<double> present;
  for (int l = 0; l < routes_; ++l) {
    for (const MarkedPoint& p : routes[l]) {
      if (p.arrival > 0) continue;
      if (p.arrival <= t_lo) {
        if (t_lo < p.departure()) {
          ++counts[l];
          present.insert(p.departure());
        }
      } else {
        events_.push_back({p.arrival, true, l, p.index, p.departure()});
      }
      if (t_lo < p.departure() && p.departure() <= 0) {
        events_.push_back({p.departure(), false, l, p.index, p.departure()});
      }
    }
  }
  std::sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.arrival != b.arrival) return !a.arrival;
    if (a.route != b.route) return a.route < b.route;
    return a.index < b.index;
  });

  const double none = -std::numeric_limits<double>::infinity();
  auto record = [&] {
    int total = 0;
    for (int c : counts) total += c;
    total_.push_back(total);
    counts_.insert(counts_.end(), counts.begin(), counts.end());
    max_departure_.push_back(present.empty() ? none : *present.rbegin());
  };
  record();
  for (const Event& e : events_) {
    const double d = e.departure;
    if (e.arrival) {
      ++counts[e.route];
      present.insert(d);
    } else {
      --counts[e.route];
      present.erase(present.find(d));
    }
    record();
  }
}

std::size_t EventTimeline::position(double t) const {
  if (t < t_lo_) throw Error(ErrorCode::UncertifiedTime, "time lies before the timeline window");
  const auto it = std::upper_bound(events_.begin(), events_.end(), t,
                                   [](double x, const Event& e) { return x < e.time; });
  return static_cast<std::size_t>(it - events_.begin());
}

double EventTimeline::max_remaining(double t) const {
  const double d = max_departure_.at(position(t));
  return d > t ? d - t : 0.0;
}

int EventTimeline::max_occupancy(double a, double b) const {
  const std::size_t lo = position(a), hi = position(b);
  int best = total_.at(lo);
  for (std::size_t k = lo + 1; k <= hi; ++k) best = std::max(best, total_[k]);
  return best;
}

EventTimeline timeline(const std::vector<MarkedPoint>& points, double t_lo) {
  return EventTimeline({points}, t_lo);
}

}  // namespace perfsamp
