#include "perfsamp/arrival_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "perfsamp/error.hpp"

namespace perfsamp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr long kTiltedStepCap = 100'000'000;
constexpr long kRestartCap = 1'000'000;
constexpr long kRejectionCap = 10'000'000;

Step nominal_step(const WalkParams& p, RngStream& stream) {
  const double x = sample(p.interarrival, stream);
  const double used = p.heavy_tail ? std::min(x, *p.tilt.truncation_b) : x;
  return {p.slope() - used, x};
}

// Y under the tilt dP_eta/dP = exp(eta Y), i.e. X tilted by -eta.
Step tilted_step(const WalkParams& p, RngStream& stream) {
  if (!p.heavy_tail) {
    const double x = sample_tilted(p.interarrival, -p.tilt.eta, stream);
    return {p.slope() - x, x};
  }
  // The tilt only sees min(X, b), so accepting a nominal X with probability
  // exp(-eta min(X, b)) yields the truncated tilted law and a raw X consistent
  // with it: given min(X, b) = b, X is nominal conditioned on X >= b.
  const double b = *p.tilt.truncation_b;
  for (long i = 0; i < kRejectionCap; ++i) {
    const double x = sample(p.interarrival, stream);
    const double t = std::min(x, b);
    if (stream.next_uniform() <= std::exp(-p.tilt.eta * t)) return {p.slope() - t, x};
  }
  throw Error(ErrorCode::IterationCap, "truncated tilted draw was never accepted");
}

void count_restart(long& restarts, WalkStats* stats, const char* where) {
  if (stats) ++stats->rejections;
  if (++restarts > kRestartCap) {
    throw Error(ErrorCode::IterationCap, std::string(where) + " exceeded the restart cap");
  }
}

}  // namespace

WalkParams make_walk_params(const DistributionSpec& interarrival, double epsilon_fraction,
                            double m_fraction, HeavyTailMode mode) {
  if (!(epsilon_fraction > 0 && epsilon_fraction < 1)) {
    throw Error(ErrorCode::InvalidModel, "epsilon fraction must lie in (0, 1)");
  }
  if (!(m_fraction > 0)) throw Error(ErrorCode::InvalidModel, "m fraction must be positive");
  WalkParams p;
  p.interarrival = interarrival;
  const double mu = interarrival.mean();
  const double eps = epsilon_fraction * mu;
  p.heavy_tail = mode == HeavyTailMode::On ||
                 (mode == HeavyTailMode::Auto && !interarrival.has_exponential_moment());
  p.tilt = p.heavy_tail ? solve_truncation(interarrival, mu, eps)
                        : make_tilt_context(interarrival, mu, eps);
  p.m = m_fraction * mu;
  return p;
}

double path_end(const Path& path) noexcept {
  double s = 0.0;
  for (const Step& st : path) s += st.y;
  return s;
}

UpcrossDraw bernoulli_upcross(const WalkParams& params, double xi, RngStream& stream,
                              WalkStats* stats) {
  UpcrossDraw out;
  if (xi == kInf) return out;
  if (xi < 0) {
    out.crossed = true;
    return out;
  }
  // J = [U <= exp(-eta S_T)] with S_T > xi, so U > exp(-eta xi) already decides J = 0.
  const double u = stream.next_uniform();
  const double eta = params.tilt.eta;
  if (u > std::exp(-eta * xi)) return out;
  double s = 0.0;
  long steps = 0;
  while (!(s > xi)) {
    const Step st = tilted_step(params, stream);
    s += st.y;
    out.path.push_back(st);
    if (++steps > kTiltedStepCap) {
      throw Error(ErrorCode::IterationCap, "tilted walk did not cross its level");
    }
  }
  if (stats) stats->tilted_steps += steps;
  out.crossed = u <= std::exp(-eta * s);
  if (!out.crossed) out.path.clear();
  return out;
}

Path segment_to_down_level(const WalkParams& params, double xi, double gamma, RngStream& stream,
                           WalkStats* stats) {
  if (!(gamma < 0)) throw Error(ErrorCode::InvalidModel, "down level must be negative");
  long restarts = 0;
  while (true) {
    if (stats) ++stats->proposals;
    Path path;
    double s = 0.0;
    bool exceeded = false;
    while (!(s < gamma)) {
      const Step st = nominal_step(params, stream);
      s += st.y;
      path.push_back(st);
      if (s > xi) {
        exceeded = true;
        break;
      }
    }
    if (!exceeded && !bernoulli_upcross(params, xi - s, stream, stats).crossed) return path;
    count_restart(restarts, stats, "down segment");
  }
}

UpSegment segment_upcross_or_terminate(const WalkParams& params, double xi, RngStream& stream,
                                       WalkStats* stats) {
  UpSegment out;
  const double m = params.m;
  // Rising by more than m would break the barrier.
  if (xi <= m) return out;
  const double eta = params.tilt.eta;
  long restarts = 0;
  while (true) {
    if (stats) ++stats->proposals;
    const double u = stream.next_uniform();
    if (u > std::exp(-eta * m)) return out;
    Path path;
    double s = 0.0;
    long steps = 0;
    while (!(s > m)) {
      const Step st = tilted_step(params, stream);
      s += st.y;
      path.push_back(st);
      if (++steps > kTiltedStepCap) {
        throw Error(ErrorCode::IterationCap, "tilted walk did not rise by m");
      }
    }
    if (stats) stats->tilted_steps += steps;
    if (u > std::exp(-eta * s)) return out;
    // The rise happens; keep it only if the walk then stays below xi forever.
    if (!bernoulli_upcross(params, xi - s, stream, stats).crossed) {
      out.cont = true;
      out.path = std::move(path);
      return out;
    }
    count_restart(restarts, stats, "up segment");
  }
}

Path bridge_fixed_length(const WalkParams& params, long h, double xi, RngStream& stream,
                         WalkStats* stats) {
  if (h < 1) throw Error(ErrorCode::InvalidModel, "bridge needs at least one step");
  long restarts = 0;
  while (true) {
    if (stats) ++stats->proposals;
    Path path;
    double s = 0.0;
    bool exceeded = false;
    for (long i = 0; i < h; ++i) {
      const Step st = nominal_step(params, stream);
      s += st.y;
      path.push_back(st);
      if (s > xi) {
        exceeded = true;
        break;
      }
    }
    if (!exceeded && !bernoulli_upcross(params, xi - s, stream, stats).crossed) return path;
    count_restart(restarts, stats, "bridge");
  }
}

std::vector<long> ArrivalBlocks::kappas() const {
  std::vector<long> k = {1};
  for (const auto& b : blocks) k.push_back(b.kappa);
  return k;
}

ArrivalSampler::ArrivalSampler(WalkParams params) : params_(std::move(params)), barrier_(kInf) {
  blocks_.slope = params_.slope();
  blocks_.m = params_.m;
  blocks_.heavy_tail = params_.heavy_tail;
  blocks_.truncation_b = params_.tilt.truncation_b;
}

void ArrivalSampler::begin(RngStream& stream) {
  const double a1 = sample_equilibrium(params_.interarrival, stream);
  blocks_.a1 = a1;
  blocks_.a1_truncated = a1;
  if (params_.heavy_tail) {
    const double b = *params_.tilt.truncation_b;
    double xe = a1;
    long tries = 0;
    while (xe > b) {
      xe = sample_equilibrium(params_.interarrival, stream);
      if (++tries > kRejectionCap) {
        throw Error(ErrorCode::IterationCap, "truncated equilibrium draw was never accepted");
      }
    }
    blocks_.a1_truncated = xe;
    blocks_.arrivals_b.push_back(-xe);
  }
  blocks_.walk.push_back(0.0);
  blocks_.arrivals.push_back(-a1);
}

void ArrivalSampler::append(const Path& path) {
  for (const Step& st : path) {
    blocks_.walk.push_back(blocks_.walk.back() + st.y);
    blocks_.raw_x.push_back(st.raw_x);
    blocks_.arrivals.push_back(blocks_.arrivals.back() - st.raw_x);
    if (params_.heavy_tail) {
      blocks_.arrivals_b.push_back(blocks_.arrivals_b.back() - (params_.slope() - st.y));
    }
  }
}

void ArrivalSampler::extend(const BlockStartLookup& block_start_at_least, RngStream& stream) {
  if (blocks_.walk.empty()) begin(stream);
  ArrivalBlock block;
  block.delta0 = blocks_.steps();
  block.level = blocks_.walk.back();
  const double target = block.level - params_.m;
  while (true) {
    const double here = blocks_.walk.back();
    if (!(here < target)) {
      append(segment_to_down_level(params_, barrier_ - here, target - here, stream, &stats_));
    }
    block.deltas.push_back(blocks_.steps());
    const UpSegment up =
        segment_upcross_or_terminate(params_, barrier_ - blocks_.walk.back(), stream, &stats_);
    if (!up.cont) break;
    append(up.path);
    block.gammas.push_back(blocks_.steps());
  }
  block.alpha = static_cast<long>(block.deltas.size());
  const long last = block.deltas.back();
  barrier_ = blocks_.walk.back() + params_.m;
  block.barrier_after = barrier_;
  block.kappa = block_start_at_least(last + 1);
  const long h = block.kappa - 1 - last;
  if (h > 0) append(bridge_fixed_length(params_, h, params_.m, stream, &stats_));
  blocks_.blocks.push_back(std::move(block));
}

namespace {

ArrivalBlocks generate_blocks(const WalkParams& params, const ServiceBlocks& service, int count,
                              RngStream& stream) {
  if (count < 1) throw Error(ErrorCode::InvalidModel, "need at least one block");
  const auto starts = service.block_starts();
  auto lookup = [&](long n) {
    const auto it = std::lower_bound(starts.begin(), starts.end(), n);
    if (it == starts.end()) {
      throw Error(ErrorCode::InvalidModel, "service blocks do not certify a start beyond the walk");
    }
    return *it;
  };
  ArrivalSampler sampler(params);
  for (int j = 0; j < count; ++j) sampler.extend(lookup, stream);
  return sampler.blocks();
}

}  // namespace

ArrivalBlocks generate_arrival_blocks(const WalkParams& params, const ServiceBlocks& service,
                                      int count, RngStream& stream) {
  return generate_blocks(params, service, count, stream);
}

ArrivalBlocks generate_arrival_blocks_heavy(const WalkParams& params,
                                            const ServiceBlocks& service, int count,
                                            RngStream& stream) {
  if (!params.heavy_tail || !params.tilt.truncation_b) {
    throw Error(ErrorCode::InvalidModel, "heavy-tail generation needs a truncation level");
  }
  return generate_blocks(params, service, count, stream);
}

std::vector<std::string> check_arrival_invariants(const ArrivalBlocks& ab,
                                                  const std::vector<long>& service_starts) {
  std::vector<std::string> bad;
  auto report = [&](const std::string& what, long a, long b) {
    std::ostringstream os;
    os << what << " (" << a << ", " << b << ")";
    bad.push_back(os.str());
  };
  const long steps = ab.steps();
  const double c = ab.slope;
  const auto& S = ab.walk;
  if (static_cast<long>(ab.arrivals.size()) != steps + 1) report("arrival count", steps, 0);

  // Affine identity on the walk's own arrivals.
  const auto& walk_arrivals = ab.heavy_tail ? ab.arrivals_b : ab.arrivals;
  for (long n = 0; n <= steps; ++n) {
    const double lhs = walk_arrivals[n] - walk_arrivals[0] + n * c - S[n];
    if (!(std::abs(lhs) <= 1e-9)) report("affine identity", n, 0);
  }
  for (long n = 1; n < static_cast<long>(ab.arrivals.size()); ++n) {
    if (!(ab.arrivals[n] < ab.arrivals[n - 1])) report("arrivals not decreasing", n, 0);
  }

  if (ab.heavy_tail) {
    const double b = *ab.truncation_b;
    for (long i = 0; i < steps; ++i) {
      const double truncated = c - (S[i + 1] - S[i]);
      if (!(ab.raw_x[i] >= truncated - 1e-12) || truncated > b + 1e-12) {
        report("truncation coupling X >= min(X, b)", i + 2, 0);
      }
    }
    for (long n = 0; n <= steps; ++n) {
      if (!(std::abs(ab.arrivals[n]) >= std::abs(ab.arrivals_b[n]) - 1e-12)) {
        report("|A| >= |A(b)|", n + 1, 0);
      }
    }
    if (ab.a1 <= b && ab.a1_truncated != ab.a1) report("A_1 <= b but A_1(b) differs", 1, 0);
    if (!(ab.a1_truncated <= b)) report("A_1(b) above b", 1, 0);
  }

  long prev_kappa = 1;
  for (std::size_t j = 0; j < ab.blocks.size(); ++j) {
    const ArrivalBlock& blk = ab.blocks[j];
    const long jj = static_cast<long>(j) + 1;
    if (blk.delta0 != prev_kappa - 1) report("Delta_j(0) = kappa_{j-1} - 1", jj, blk.delta0);
    const double level = S[blk.delta0];
    if (blk.alpha != static_cast<long>(blk.deltas.size()) ||
        blk.alpha != static_cast<long>(blk.gammas.size()) + 1) {
      report("alpha bookkeeping", jj, blk.alpha);
    }
    long from = blk.delta0;
    for (long l = 0; l < blk.alpha; ++l) {
      const long d = blk.deltas[l];
      if (!(S[d] < level - ab.m)) report("Delta below level - m", jj, d);
      for (long n = from; n < d; ++n) {
        if (S[n] < level - ab.m) report("Delta is not a first passage", jj, n);
      }
      if (l + 1 < blk.alpha) {
        const long g = blk.gammas[l];
        if (!(S[g] > S[d] + ab.m)) report("Gamma above Delta + m", jj, g);
        for (long n = d; n < g; ++n) {
          if (S[n] > S[d] + ab.m) report("Gamma is not a first passage", jj, n);
        }
        from = g;
      }
    }
    const long last = blk.deltas.back();
    for (long n = last; n <= steps; ++n) {
      if (S[n] > level) report("walk rises above the block level", jj, n);
      if (S[n] > blk.barrier_after) report("walk crosses the barrier", jj, n);
    }
    if (blk.kappa < last + 1) report("kappa below Delta + 1", jj, blk.kappa);
    const auto it = std::lower_bound(service_starts.begin(), service_starts.end(), last + 1);
    if (it == service_starts.end() || *it != blk.kappa) {
      report("kappa is not the first service block start", jj, blk.kappa);
    }
    // Customers beyond kappa_j are at least (n - kappa_{j-1}) slopes before A_{kappa_{j-1}}.
    const double anchor = ab.arrival(prev_kappa);
    for (long n = blk.kappa; n <= steps + 1; ++n) {
      if (!(std::abs(ab.arrival(n) - anchor) >= (n - prev_kappa) * c - 1e-9)) {
        report("arrival gap below the boundary", jj, n);
      }
    }
    prev_kappa = blk.kappa;
  }
  if (!ab.blocks.empty() && ab.blocks.back().kappa != steps + 1) {
    report("walk does not end at kappa - 1", ab.blocks.back().kappa, steps);
  }
  return bad;
}

}  // namespace perfsamp
