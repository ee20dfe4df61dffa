#include "doctest.h"

#include <cmath>

#include "perfsamp/benchmark.hpp"
#include "perfsamp/forward_sim.hpp"

using namespace perfsamp;

TEST_CASE("forward simulation of an Erlang loss station") {
  StationModel m;
  m.interarrival = DistributionSpec::exponential(2.0);
  m.capacity = 3;
  auto s = create_stream(80, 0);
  const auto est = simulate_forward(m, {2e5, 0.1, 20}, s);
  const auto erlang = erlang_b_distribution(3, 2.0);
  CHECK(std::abs(est.station_full[0].mean - 0.2105263157894737) < 4 * est.station_full[0].std_error);
  // With Poisson input, time and call congestion coincide.
  CHECK(std::abs(est.route_blocking[0].mean - 0.2105263157894737) <
        4 * est.route_blocking[0].std_error);
  double mean = 0;
  for (int k = 0; k <= 3; ++k) mean += k * erlang.pmf[k];
  CHECK(std::abs(est.station_occupancy[0].mean - mean) < 4 * est.station_occupancy[0].std_error);
  CHECK(total_variation(est.occupancy_pmf, erlang.pmf) < 0.01);
}

TEST_CASE("forward simulation of a two-station network") {
  LossNetworkModel m;
  m.capacities = {4, 3};
  m.incidence = {{1, 1}, {1, 0}};
  m.interarrival = {DistributionSpec::exponential(1.5), DistributionSpec::exponential(1.0)};
  m.service = {DistributionSpec::exponential(1.0), DistributionSpec::exponential(1.0)};
  auto s = create_stream(81, 0);
  const auto est = simulate_forward(m, {2e5, 0.1, 20}, s);
  const auto pf = product_form_distribution(m.incidence, {4, 3}, {1.5, 1.0});
  double n1 = 0, n2 = 0;
  for (const auto& st : pf) {
    n1 += st.counts[0] * st.probability;
    n2 += st.counts[1] * st.probability;
  }
  CHECK(std::abs(est.route_occupancy[0].mean - n1) < 4 * est.route_occupancy[0].std_error);
  CHECK(std::abs(est.route_occupancy[1].mean - n2) < 4 * est.route_occupancy[1].std_error);
}

TEST_CASE("regime capacities") {
  CHECK_FALSE(regime_capacity(Regime::INF, 16, 2.0));
  CHECK(*regime_capacity(Regime::QD, 16, 2.0) == 16);
  CHECK(*regime_capacity(Regime::QED, 16, 2.0) == 24);
  CHECK(regime_from_string("QED") == Regime::QED);
  CHECK_FALSE(regime_from_string("qd"));
}

TEST_CASE("scaling benchmark") {
  StationModel m;
  CHECK_THROWS_AS(run_scaling_benchmark(m, Regime::INF, {2, 4}, 10, 1), Error);
  const auto t = run_scaling_benchmark(m, Regime::QD, {2, 4, 8}, 30, 82);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[2].capacity == 8);
  REQUIRE(t.tau_slope);
  CHECK(std::isfinite(*t.tau_slope));
  CHECK(t.kappa_slope > 0);
  // Same seed, same table.
  const auto again = run_scaling_benchmark(m, Regime::QD, {2, 4, 8}, 30, 82);
  CHECK(again.kappa_slope == t.kappa_slope);
}

TEST_CASE("doubling replications shrinks the standard error by about sqrt 2") {
  StationModel m;
  m.interarrival = DistributionSpec::exponential(4.0);
  const auto a = run_scaling_benchmark(m, Regime::INF, {1, 2}, 400, 83);
  const auto b = run_scaling_benchmark(m, Regime::INF, {1, 2}, 800, 84);
  for (std::size_t i = 0; i < 2; ++i) {
    const double ratio = b.rows[i].kappa.std_error / a.rows[i].kappa.std_error;
    CHECK(std::abs(ratio * std::sqrt(2.0) - 1.0) < 0.3);
  }
}
