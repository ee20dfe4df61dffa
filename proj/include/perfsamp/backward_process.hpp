#pragma once

#include <cstddef>
#include <vector>

namespace perfsamp {

/// Customer n of the backward stream: arrives at A_n < 0 and needs V_n.
struct MarkedPoint {
  long index = 0;
  double arrival = 0.0;
  double service = 0.0;

  double departure() const noexcept { return arrival + service; }
};

/// Infinite-server (or loss) state: time since the last arrival and the
/// sorted remaining service times of everyone present.
struct SystemState {
  double elapsed_age = 0.0;
  std::vector<double> remaining;  // ascending

  int occupancy() const noexcept { return static_cast<int>(remaining.size()); }
  /// Q(y): customers with remaining time strictly above y.
  int count_above(double y) const;
  /// Largest remaining time, 0 for an empty system.
  double max_remaining() const noexcept { return remaining.empty() ? 0.0 : remaining.back(); }
};

/// State at time t reconstructed from the points. A customer arriving exactly
/// at t is present; one departing exactly at t is not. Throws UncertifiedTime
/// when t lies before certified_from or no arrival at or before t is known.
SystemState state_at(const std::vector<MarkedPoint>& points, double t, double certified_from);

/// Occupancy path of one or more superposed customer streams on [t_lo, 0].
/// Events at equal times are ordered departures first, then by route.
class EventTimeline {
 public:
  struct Event {
    double time = 0.0;
    bool arrival = false;
    int route = 0;
    long index = 0;
    double departure = 0.0;  // departure epoch of the customer concerned
  };

  EventTimeline(const std::vector<std::vector<MarkedPoint>>& routes, double t_lo);

  double window_lo() const noexcept { return t_lo_; }
  int routes() const noexcept { return routes_; }
  const std::vector<Event>& events() const noexcept { return events_; }

  /// Number of events with time <= t; the state after that many events holds on
  /// [t, next event).
  std::size_t position(double t) const;

  /// Occupancies after k events (k = 0 is the state at t_lo).
  int total_after(std::size_t k) const { return total_.at(k); }
  int route_after(std::size_t k, int route) const {
    return counts_.at(k * static_cast<std::size_t>(routes_) + static_cast<std::size_t>(route));
  }

  int occupancy(double t) const { return total_after(position(t)); }
  int route_occupancy(int route, double t) const { return route_after(position(t), route); }

  /// R(t): largest remaining service time among those present at t.
  double max_remaining(double t) const;

  /// Largest total occupancy over the closed interval [a, b].
  int max_occupancy(double a, double b) const;

 private:
  double t_lo_;
  int routes_;
  std::vector<Event> events_;
  std::vector<int> total_;
  std::vector<int> counts_;
  std::vector<double> max_departure_;
};

/// Single-stream timeline on the certified window [t_lo, 0].
EventTimeline timeline(const std::vector<MarkedPoint>& points, double t_lo);

}  // namespace perfsamp
