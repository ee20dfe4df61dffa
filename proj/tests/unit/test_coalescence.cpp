#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "perfsamp/coalescence.hpp"
#include "perfsamp/error.hpp"
#include "perfsamp/validation.hpp"

using namespace perfsamp;

namespace {

std::vector<MarkedPoint> poisson_points(RngStream& s, int n, double rate, double mean_service) {
  std::vector<MarkedPoint> pts;
  double a = 0.0;
  for (int i = 1; i <= n; ++i) {
    a -= -std::log(s.next_uniform()) / rate;
    pts.push_back({i, a, -mean_service * std::log(s.next_uniform())});
  }
  return pts;
}

StationModel mm(double load, std::optional<int> capacity) {
  StationModel m;
  m.interarrival = DistributionSpec::exponential(load);
  m.service = DistributionSpec::exponential(1.0);
  m.capacity = capacity;
  return m;
}

std::vector<double> occupancy_counts(const StationModel& model, int n, std::uint64_t seed,
                                     std::size_t bins, bool loss) {
  std::vector<double> counts(bins, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto stream = create_stream(seed, static_cast<std::uint64_t>(i));
    const auto ps = loss ? perfect_sample_loss(model, stream) : perfect_sample_infinite(model, stream);
    counts[std::min<std::size_t>(ps.state.remaining.size(), bins - 1)] += 1;
  }
  return counts;
}

}  // namespace

TEST_CASE("hand-built detection") {
  const std::vector<MarkedPoint> pts = {{1, -1.0, 0.5}, {2, -4.0, 1.0}};
  const auto tl = timeline(pts, -4.0);
  const auto earliest = detect_coalescence(tl, 1, ScanOrder::Earliest);
  REQUIRE(earliest);
  CHECK(earliest->tau == -3.0);
  CHECK(earliest->T == -3.0);
  const auto nearest = detect_coalescence(tl, 1, ScanOrder::Nearest);
  REQUIRE(nearest);
  CHECK(nearest->tau == -0.5);
  CHECK(nearest->T == -0.5);
  // Restricting candidates to the part below -1 finds the older departure.
  const auto below = detect_coalescence(tl, 1, ScanOrder::Nearest, -1.0);
  REQUIRE(below);
  CHECK(below->tau == -3.0);
}

TEST_CASE("infinite capacity only needs a short residual") {
  // Customer 3 is still present when customer 2 departs at -3, and leaves at -1.2.
  const std::vector<MarkedPoint> pts = {{1, -2.0, 0.5}, {2, -4.0, 1.0}, {3, -5.0, 3.8}};
  const auto tl = timeline(pts, -5.0);
  const auto c = detect_coalescence(tl, std::nullopt, ScanOrder::Earliest);
  REQUIRE(c);
  CHECK(c->tau == -3.0);
  CHECK(c->T == doctest::Approx(-1.2));
  const auto n = detect_coalescence(tl, std::nullopt, ScanOrder::Nearest);
  REQUIRE(n);
  CHECK(n->tau == doctest::Approx(-1.2));
  // Nobody departs before 0 if the only customer outlives it.
  const std::vector<MarkedPoint> lone = {{1, -1.0, 2.0}};
  CHECK_FALSE(detect_coalescence(timeline(lone, -1.0), std::nullopt));
}

TEST_CASE("later blocks never change the certified state") {
  SamplerOptions o;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    BackwardSampler b(DistributionSpec::exponential(5.0), DistributionSpec::exponential(1.0), o,
                      create_stream(69, i));
    b.extend();
    const double lo = b.certified_from();
    const auto first = state_at(b.points(), lo, lo);
    const auto at_zero = state_at(b.points(), 0.0, lo);
    b.extend();
    b.extend();
    REQUIRE(b.check_invariants().empty());
    const auto later = b.points();
    REQUIRE(state_at(later, lo, b.certified_from()).remaining == first.remaining);
    REQUIRE(state_at(later, 0.0, b.certified_from()).remaining == at_zero.remaining);
  }
}

TEST_CASE("a crowded interval defers detection") {
  // Customer 4 outlives the departure at -2.5 and overlaps customers 1 and 2.
  const std::vector<MarkedPoint> pts = {
      {1, -2.0, 1.0}, {2, -2.2, 1.5}, {3, -3.0, 0.5}, {4, -3.2, 1.7}};
  const auto tl = timeline(pts, -3.2);
  auto tau = [&](int c) { return detect_coalescence(tl, c, ScanOrder::Earliest).value().tau; };
  CHECK(tau(1) == doctest::Approx(-1.0));
  CHECK(tau(2) == doctest::Approx(-1.5));
  CHECK(tau(3) == doctest::Approx(-2.5));
}

TEST_CASE("accepted detections satisfy both conditions from scratch") {
  auto s = create_stream(60, 0);
  int found = 0;
  for (int run = 0; run < 300; ++run) {
    const auto pts = poisson_points(s, 60, 3.0, 1.0);
    const double lo = pts[29].arrival;
    const auto tl = timeline(pts, lo);
    for (auto order : {ScanOrder::Nearest, ScanOrder::Earliest}) {
      const auto c = detect_coalescence(tl, 3, order);
      if (!c) continue;
      ++found;
      const double r = state_at(pts, c->tau, lo).max_remaining();
      REQUIRE(r < -c->tau);
      REQUIRE(c->T == c->tau + r);
      int worst = state_at(pts, c->tau, lo).occupancy();
      for (const auto& e : tl.events()) {
        if (e.time > c->tau && e.time <= c->T) worst = std::max(worst, state_at(pts, e.time, lo).occupancy());
      }
      REQUIRE(worst <= 3);
    }
  }
  CHECK(found > 100);
}

TEST_CASE("replay without capacity reproduces the infinite-server state") {
  auto s = create_stream(61, 0);
  for (int run = 0; run < 100; ++run) {
    const auto pts = poisson_points(s, 40, 2.0, 1.0);
    const double lo = pts[19].arrival;
    const double T = lo * s.next_uniform();
    const auto a = replay_loss_forward(pts, T, std::nullopt, lo);
    const auto b = state_at(pts, 0.0, lo);
    REQUIRE(a.remaining.size() == b.remaining.size());
    for (std::size_t i = 0; i < a.remaining.size(); ++i) CHECK(a.remaining[i] == doctest::Approx(b.remaining[i]));
    CHECK(a.elapsed_age == b.elapsed_age);
  }
}

TEST_CASE("full station blocks an arrival") {
  const std::vector<MarkedPoint> pts = {{1, -0.2, 1.0}, {2, -2.0, 1.0}, {3, -3.0, 2.5}};
  const auto st = replay_loss_forward(pts, -3.5, 1, -4.0);
  REQUIRE(st.occupancy() == 1);
  CHECK(st.remaining[0] == doctest::Approx(0.8));
  CHECK(st.elapsed_age == doctest::Approx(0.2));
  const auto r = replay_forward({pts}, -3.5, -4.0,
                                [](const std::vector<int>& n, int) { return n[0] < 1; });
  CHECK(r.blocked[0] == std::vector<long>{2});
}

TEST_CASE("more servers never drop an admitted customer") {
  auto s = create_stream(62, 0);
  for (int run = 0; run < 200; ++run) {
    const auto pts = poisson_points(s, 40, 4.0, 1.0);
    const double lo = pts[39].arrival;
    for (int c = 1; c <= 5; ++c) {
      auto rule = [](int cap) {
        return [cap](const std::vector<int>& n, int) { return n[0] < cap; };
      };
      const auto small = replay_forward({pts}, lo, lo, rule(c)).admitted[0];
      const auto big = replay_forward({pts}, lo, lo, rule(c + 1)).admitted[0];
      for (long i : small) REQUIRE(std::find(big.begin(), big.end(), i) != big.end());
    }
  }
}

TEST_CASE("infinite-server samples are Poisson") {
  const auto model = mm(5.0, std::nullopt);
  const auto counts = occupancy_counts(model, 3000, 63, 30, false);
  const auto report = chi_square_test(counts, poisson_pmf_with_tail(5.0, 30));
  CHECK(report.p_value > 0.005);
}

TEST_CASE("loss samples follow Erlang's law in both scan orders") {
  auto model = mm(2.0, 3);
  const auto target = erlang_b_distribution(3, 2.0).pmf;
  auto pmf = target;
  pmf.push_back(0.0);
  auto counts = occupancy_counts(model, 3000, 64, 4, true);
  counts.push_back(0.0);
  CHECK(chi_square_test(counts, pmf).p_value > 0.005);

  model.options.scan_order = ScanOrder::Earliest;
  counts = occupancy_counts(model, 3000, 65, 4, true);
  counts.push_back(0.0);
  CHECK(chi_square_test(counts, pmf).p_value > 0.005);
}

TEST_CASE("same stream gives the same sample") {
  const auto model = mm(4.0, 5);
  const auto a = perfect_sample_loss(model, create_stream(66, 3));
  const auto b = perfect_sample_loss(model, create_stream(66, 3));
  CHECK(a.state.remaining == b.state.remaining);
  CHECK(a.state.elapsed_age == b.state.elapsed_age);
  CHECK(a.tau == b.tau);
  CHECK(a.kappa == b.kappa);
  REQUIRE(a.tau);
  CHECK(*a.T < 0);
  CHECK(*a.T >= *a.tau);
}

TEST_CASE("block budget is enforced") {
  auto model = mm(50.0, 1);
  model.options.block_budget = 1;
  int failures = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    try {
      perfect_sample_loss(model, create_stream(67, i));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BlockBudgetExceeded);
      ++failures;
    }
  }
  CHECK(failures > 0);
}

TEST_CASE("heavy-tailed arrivals") {
  StationModel model;
  model.interarrival = DistributionSpec::pareto(2.5, 0.6);
  model.service = DistributionSpec::exponential(0.5);
  model.capacity = 4;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto ps = perfect_sample_loss(model, create_stream(68, i));
    CHECK(ps.state.occupancy() <= 4);
  }
}
