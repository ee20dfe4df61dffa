#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "perfsamp/arrival_sampler.hpp"
#include "perfsamp/error.hpp"
#include "perfsamp/validation.hpp"

using namespace perfsamp;

namespace {

const WalkParams& exp_params() {
  static const WalkParams p = make_walk_params(DistributionSpec::exponential(1.0));
  return p;
}

// Plain nominal walk from 0. Returns the running maximum, stopping once it
// exceeds `stop_above` or the walk drops below `floor`.
struct Direct {
  double max = 0.0;
  double end = 0.0;
};

Direct direct_walk(const WalkParams& p, double stop_above, double floor, RngStream& s,
                   std::vector<double>* path = nullptr) {
  Direct d;
  double x = 0.0;
  for (long i = 0; i < 1'000'000; ++i) {
    x += p.slope() - sample(p.interarrival, s);
    if (path) path->push_back(x);
    d.max = std::max(d.max, x);
    if (x > stop_above || x < floor) break;
  }
  d.end = x;
  return d;
}

double binomial_se(double p, double n) { return std::sqrt(std::max(p * (1 - p), 1e-12) / n); }

struct Run {
  ServiceBlocks service;
  ArrivalBlocks arrivals;
};

Run run_blocks(const WalkParams& params, const DistributionSpec& service_law, int blocks,
               long min_steps, const RngStream& s) {
  ServiceSampler service(service_law, params.slope());
  auto service_stream = s.split(1);
  auto arrival_stream = s.split(2);
  ArrivalSampler arrivals(params);
  auto lookup = [&](long n) { return service.block_start_at_least(n, service_stream); };
  for (int j = 0; j < blocks || arrivals.blocks().steps() < min_steps; ++j) {
    arrivals.extend(lookup, arrival_stream);
  }
  return {service.blocks(), arrivals.blocks()};
}

}  // namespace

TEST_CASE("walk parameters") {
  const auto& p = exp_params();
  CHECK(p.slope() == doctest::Approx(0.8));
  CHECK(p.m == doctest::Approx(1.0));
  CHECK(p.tilt.eta == doctest::Approx(0.5385527622303236).epsilon(1e-10));
  CHECK_FALSE(p.heavy_tail);
  const auto h = make_walk_params(DistributionSpec::pareto(2.5, 0.6));
  CHECK(h.heavy_tail);
  REQUIRE(h.tilt.truncation_b.has_value());
  CHECK_THROWS_AS(make_walk_params(DistributionSpec::exponential(1.0), 1.5), Error);
}

TEST_CASE("infinite level needs no randomness and negative level always crosses") {
  auto s = create_stream(30, 0);
  CHECK_FALSE(bernoulli_upcross(exp_params(), INFINITY, s).crossed);
  CHECK(s.draws() == 0);
  CHECK(bernoulli_upcross(exp_params(), -0.1, s).crossed);
  CHECK(s.draws() == 0);
}

TEST_CASE("up-crossing probability respects the Lundberg bound") {
  const auto& p = exp_params();
  auto s = create_stream(31, 0);
  const int n = 20000;
  for (double xi : {1.0, 2.0, 4.0}) {
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      const auto d = bernoulli_upcross(p, xi, s);
      if (d.crossed) {
        ++hits;
        CHECK(path_end(d.path) > xi);
      }
    }
    const double q = static_cast<double>(hits) / n;
    CHECK(q <= std::exp(-p.tilt.eta * xi) + 3 * binomial_se(q, n));
  }
}

TEST_CASE("up-crossing probability matches direct simulation") {
  const auto& p = exp_params();
  auto s = create_stream(32, 0);
  auto t = create_stream(32, 1);
  const int n = 20000;
  const double xi = 2.0;
  int bern = 0, direct = 0;
  for (int i = 0; i < n; ++i) {
    bern += bernoulli_upcross(p, xi, s).crossed;
    direct += direct_walk(p, xi, -40.0, t).max > xi;
  }
  const double q1 = static_cast<double>(bern) / n, q2 = static_cast<double>(direct) / n;
  const double se = std::sqrt(binomial_se(q1, n) * binomial_se(q1, n) +
                              binomial_se(q2, n) * binomial_se(q2, n));
  CHECK(std::abs(q1 - q2) < 4 * se);
}

TEST_CASE("down segment length matches conditioned direct simulation") {
  const auto& p = exp_params();
  auto s = create_stream(33, 0);
  auto t = create_stream(33, 1);
  const double xi = 1.0, gamma = -1.0;
  std::vector<double> lens, direct_lens;
  for (int i = 0; i < 20000; ++i) {
    const Path path = segment_to_down_level(p, xi, gamma, s);
    REQUIRE(path_end(path) < gamma);
    lens.push_back(static_cast<double>(path.size()));
  }
  while (direct_lens.size() < 20000) {
    std::vector<double> path;
    const Direct d = direct_walk(p, xi, -40.0, t, &path);
    if (d.max > xi) continue;
    const auto it = std::find_if(path.begin(), path.end(), [&](double x) { return x < gamma; });
    direct_lens.push_back(static_cast<double>(it - path.begin() + 1));
  }
  const auto a = mean_confidence_interval(lens, 0.999);
  const auto b = mean_confidence_interval(direct_lens, 0.999);
  CHECK(a.overlaps(b));
}

TEST_CASE("continue frequency matches the conditioned rise probability") {
  const auto& p = exp_params();
  auto s = create_stream(34, 0);
  auto t = create_stream(34, 1);
  const int n = 20000;
  // Without a barrier, continuing is exactly an up-crossing of m.
  int cont = 0, cross = 0;
  for (int i = 0; i < n; ++i) {
    const UpSegment up = segment_upcross_or_terminate(p, INFINITY, s);
    if (up.cont) {
      ++cont;
      CHECK(path_end(up.path) > p.m);
    }
    cross += bernoulli_upcross(p, p.m, t).crossed;
  }
  double q1 = static_cast<double>(cont) / n, q2 = static_cast<double>(cross) / n;
  CHECK(std::abs(q1 - q2) < 4 * std::sqrt(2.0) * binomial_se(q1, n));

  // With barrier 3: P(rise above m | never above 3).
  const double xi = 3.0;
  cont = 0;
  for (int i = 0; i < n; ++i) cont += segment_upcross_or_terminate(p, xi, s).cont;
  int kept = 0, rose = 0;
  while (kept < n) {
    const Direct d = direct_walk(p, xi, -40.0, t);
    if (d.max > xi) continue;
    ++kept;
    rose += d.max > p.m;
  }
  q1 = static_cast<double>(cont) / n;
  q2 = static_cast<double>(rose) / n;
  const double se = std::sqrt(binomial_se(q1, n) * binomial_se(q1, n) +
                              binomial_se(q2, n) * binomial_se(q2, n));
  CHECK(std::abs(q1 - q2) < 4 * se);

  // A barrier within m of the walk ends the block without randomness.
  auto u = create_stream(34, 2);
  CHECK_FALSE(segment_upcross_or_terminate(p, p.m, u).cont);
  CHECK(u.draws() == 0);
}

TEST_CASE("bridge steps") {
  const auto& p = exp_params();
  auto s = create_stream(35, 0);
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(bridge_fixed_length(p, 1, 1e6, s).front().raw_x);
  CHECK(ks_test(xs, [&](double x) { return p.interarrival.cdf(x); }).p_value > 0.005);

  auto t = create_stream(35, 1);
  std::vector<double> ends, direct_ends;
  for (int i = 0; i < 10000; ++i) {
    const Path path = bridge_fixed_length(p, 3, p.m, s);
    REQUIRE(path.size() == 3);
    ends.push_back(path_end(path));
  }
  while (direct_ends.size() < 10000) {
    std::vector<double> path;
    const Direct d = direct_walk(p, p.m, -40.0, t, &path);
    if (d.max > p.m || path.size() < 3) continue;
    direct_ends.push_back(path[2]);
  }
  const auto a = mean_confidence_interval(ends, 0.999);
  const auto b = mean_confidence_interval(direct_ends, 0.999);
  CHECK(a.overlaps(b));
}

TEST_CASE("generated blocks satisfy every invariant") {
  const std::vector<std::pair<DistributionSpec, DistributionSpec>> models = {
      {DistributionSpec::exponential(1.0), DistributionSpec::exponential(1.0)},
      {DistributionSpec::gamma(2.0, 0.5), DistributionSpec::lognormal(0.0, 1.0)},
      {DistributionSpec::uniform(0.0, 2.0), DistributionSpec::deterministic(1.3)},
      {DistributionSpec::weibull(0.7, 1.0), DistributionSpec::exponential(3.0)},
      {DistributionSpec::pareto(2.5, 0.6), DistributionSpec::exponential(0.5)},
  };
  std::uint64_t id = 0;
  for (const auto& [inter, svc] : models) {
    const WalkParams params = make_walk_params(inter);
    auto s = create_stream(36, id++);
    for (int run = 0; run < 200; ++run) {
      const Run r = run_blocks(params, svc, 4, 0, s.split(run));
      const auto bad = check_arrival_invariants(r.arrivals, r.service.block_starts());
      INFO(inter.describe() << " " << (bad.empty() ? "" : bad.front()));
      REQUIRE(bad.empty());
      CHECK(r.arrivals.blocks.size() >= 4);
    }
  }
}

TEST_CASE("the checker notices a corrupted walk") {
  auto s = create_stream(37, 0);
  Run r = run_blocks(exp_params(), DistributionSpec::exponential(1.0), 2, 0, s);
  r.arrivals.walk.back() += 50.0;
  CHECK_FALSE(check_arrival_invariants(r.arrivals, r.service.block_starts()).empty());
}

TEST_CASE("stationary marginals of the reconstructed arrivals") {
  const auto& p = exp_params();
  const auto& law = p.interarrival;
  auto s = create_stream(38, 0);
  const int n = 20000;
  std::vector<double> a1, x2, x3;
  std::vector<double> pairs(16, 0.0);
  const double q1 = law.quantile(0.25), q2 = law.quantile(0.5), q3 = law.quantile(0.75);
  auto quartile = [&](double x) { return (x > q1) + (x > q2) + (x > q3); };
  for (int i = 0; i < n; ++i) {
    const Run r = run_blocks(p, DistributionSpec::exponential(1.0), 1, 2, s.split(i));
    a1.push_back(r.arrivals.a1);
    x2.push_back(r.arrivals.interarrival(2));
    x3.push_back(r.arrivals.interarrival(3));
    pairs[quartile(x2.back()) * 4 + quartile(x3.back())] += 1;
  }
  auto cdf = [&](double x) { return law.cdf(x); };
  auto eq_cdf = [&](double x) { return 1.0 - law.integrated_tail(x) / law.mean(); };
  CHECK(ks_test(a1, eq_cdf).p_value > 0.005);
  CHECK(ks_test(x2, cdf).p_value > 0.005);
  CHECK(ks_test(x3, cdf).p_value > 0.005);
  std::vector<double> uniform16(16, 1.0 / 16);
  uniform16.push_back(0.0);
  pairs.push_back(0.0);
  CHECK(chi_square_test(pairs, uniform16).p_value > 0.005);
}

TEST_CASE("number of down passages per block is geometrically dominated") {
  const auto& p = exp_params();
  auto s = create_stream(39, 0);
  std::vector<double> alphas;
  for (int i = 0; i < 5000; ++i) {
    const Run r = run_blocks(p, DistributionSpec::exponential(1.0), 1, 0, s.split(i));
    alphas.push_back(static_cast<double>(r.arrivals.blocks[0].alpha));
  }
  const auto ci = mean_confidence_interval(alphas);
  CHECK(ci.mean <= 1.0 / (1.0 - std::exp(-p.tilt.eta * p.m)) + 3 * ci.std_error);
}

TEST_CASE("heavy-tailed arrivals keep raw interarrival times") {
  const auto law = DistributionSpec::pareto(2.5, 0.6);
  const WalkParams p = make_walk_params(law);
  REQUIRE(p.heavy_tail);
  auto s = create_stream(40, 0);
  std::vector<double> a1, x2;
  for (int i = 0; i < 10000; ++i) {
    const Run r = run_blocks(p, DistributionSpec::exponential(0.5), 1, 1, s.split(i));
    REQUIRE(check_arrival_invariants(r.arrivals, r.service.block_starts()).empty());
    a1.push_back(r.arrivals.a1);
    x2.push_back(r.arrivals.interarrival(2));
  }
  CHECK(ks_test(x2, [&](double x) { return law.cdf(x); }).p_value > 0.005);
  auto eq_cdf = [&](double x) { return 1.0 - law.integrated_tail(x) / law.mean(); };
  CHECK(ks_test(a1, eq_cdf).p_value > 0.005);
}

TEST_CASE("heavy generation requires a truncation level") {
  auto s = create_stream(41, 0);
  const auto sb = generate_service_blocks(DistributionSpec::exponential(1.0), 0.8, 5, s);
  CHECK_THROWS_AS(generate_arrival_blocks_heavy(exp_params(), sb, 1, s), Error);
}
