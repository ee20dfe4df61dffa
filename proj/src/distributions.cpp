#include "perfsamp/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "perfsamp/error.hpp"

namespace perfsamp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.41421356237309504880;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// Integral over a finite interval; integrands here are smooth on each piece.
double integrate_finite(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
}

// e^{x} p without producing inf * 0 far in the tail.
double exp_times(double x, double p) { return p > 0.0 ? std::exp(x + std::log(p)) : 0.0; }

double integrate_to_infinity(const std::function<double(double)>& f, double a) {
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double x) { return f(x); }, a, kInf, 1e-14);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidModel, what);
}

}  // namespace

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::Exponential: return "exponential";
    case Family::Gamma: return "gamma";
    case Family::Uniform: return "uniform";
    case Family::Deterministic: return "deterministic";
    case Family::LogNormal: return "lognormal";
    case Family::Weibull: return "weibull";
    case Family::Pareto: return "pareto";
  }
  return "unknown";
}

std::optional<Family> family_from_string(std::string_view name) noexcept {
  static constexpr std::array<Family, 7> all = {Family::Exponential, Family::Gamma,
                                                Family::Uniform,     Family::Deterministic,
                                                Family::LogNormal,   Family::Weibull,
                                                Family::Pareto};
  for (Family f : all) {
    if (to_string(f) == name) return f;
  }
  if (name == "erlang") return Family::Gamma;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// construction

DistributionSpec DistributionSpec::exponential(double rate) {
  require(rate > 0 && std::isfinite(rate), "exponential rate must be positive");
  return {Family::Exponential, rate, 0.0};
}

DistributionSpec DistributionSpec::gamma(double shape, double rate) {
  require(shape > 0 && rate > 0, "gamma shape and rate must be positive");
  return {Family::Gamma, shape, rate};
}

DistributionSpec DistributionSpec::erlang(int phases, double rate) {
  require(phases >= 1, "erlang needs at least one phase");
  return gamma(static_cast<double>(phases), rate);
}

DistributionSpec DistributionSpec::uniform(double low, double high) {
  require(low >= 0 && high > low, "uniform needs 0 <= low < high");
  return {Family::Uniform, low, high};
}

DistributionSpec DistributionSpec::deterministic(double value) {
  require(value > 0 && std::isfinite(value), "deterministic value must be positive");
  return {Family::Deterministic, value, 0.0};
}

DistributionSpec DistributionSpec::lognormal(double mu, double sigma) {
  require(std::isfinite(mu) && sigma > 0, "lognormal sigma must be positive");
  return {Family::LogNormal, mu, sigma};
}

DistributionSpec DistributionSpec::weibull(double shape, double scale) {
  require(shape > 0 && scale > 0, "weibull shape and scale must be positive");
  return {Family::Weibull, shape, scale};
}

DistributionSpec DistributionSpec::pareto(double alpha, double xm) {
  require(alpha > 1 && xm > 0, "pareto needs alpha > 1 (finite mean) and xm > 0");
  return {Family::Pareto, alpha, xm};
}

DistributionSpec DistributionSpec::scaled(double divisor) const {
  require(divisor > 0 && std::isfinite(divisor), "scale divisor must be positive");
  DistributionSpec out = *this;
  out.scale_ *= divisor;
  return out;
}

std::string DistributionSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(family_) << "(" << p1_;
  if (family_ != Family::Exponential && family_ != Family::Deterministic) os << ", " << p2_;
  os << ")";
  if (scale_ != 1.0) os << "/" << scale_;
  return os.str();
}

// ---------------------------------------------------------------------------
// unscaled primitives

double DistributionSpec::base_cdf(double z) const {
  if (z <= 0) return 0.0;
  if (std::isinf(z)) return 1.0;
  switch (family_) {
    case Family::Exponential: return -std::expm1(-p1_ * z);
    case Family::Gamma: return boost::math::gamma_p(p1_, p2_ * z);
    case Family::Uniform:
      if (z <= p1_) return 0.0;
      if (z >= p2_) return 1.0;
      return (z - p1_) / (p2_ - p1_);
    case Family::Deterministic: return z >= p1_ ? 1.0 : 0.0;
    case Family::LogNormal: return normal_cdf((std::log(z) - p1_) / p2_);
    case Family::Weibull: return -std::expm1(-std::pow(z / p2_, p1_));
    case Family::Pareto: return z <= p2_ ? 0.0 : -std::expm1(p1_ * std::log(p2_ / z));
  }
  return 0.0;
}

double DistributionSpec::base_tail(double z) const {
  if (z <= 0) return 1.0;
  if (std::isinf(z)) return 0.0;
  switch (family_) {
    case Family::Exponential: return std::exp(-p1_ * z);
    case Family::Gamma: return boost::math::gamma_q(p1_, p2_ * z);
    case Family::Uniform:
      if (z <= p1_) return 1.0;
      if (z >= p2_) return 0.0;
      return (p2_ - z) / (p2_ - p1_);
    case Family::Deterministic: return z >= p1_ ? 0.0 : 1.0;
    case Family::LogNormal: return normal_cdf(-(std::log(z) - p1_) / p2_);
    case Family::Weibull: return std::exp(-std::pow(z / p2_, p1_));
    case Family::Pareto: return z <= p2_ ? 1.0 : std::pow(p2_ / z, p1_);
  }
  return 0.0;
}

double DistributionSpec::base_quantile(double p) const {
  if (p <= 0) return family_ == Family::Pareto ? p2_ : (family_ == Family::Uniform ? p1_ : 0.0);
  if (p >= 1) return base_tail_quantile(0.0);
  switch (family_) {
    case Family::Exponential: return -std::log1p(-p) / p1_;
    case Family::Gamma: return boost::math::gamma_p_inv(p1_, p) / p2_;
    case Family::Uniform: return p1_ + p * (p2_ - p1_);
    case Family::Deterministic: return p1_;
    case Family::LogNormal:
      return std::exp(p1_ - p2_ * kSqrt2 * boost::math::erfc_inv(2.0 * p));
    case Family::Weibull: return p2_ * std::pow(-std::log1p(-p), 1.0 / p1_);
    case Family::Pareto: return p2_ * std::exp(-std::log1p(-p) / p1_);
  }
  return 0.0;
}

double DistributionSpec::base_tail_quantile(double q) const {
  if (q <= 0) {
    switch (family_) {
      case Family::Uniform: return p2_;
      case Family::Deterministic: return p1_;
      default: return kInf;
    }
  }
  if (q >= 1) return base_quantile(0.0);
  switch (family_) {
    case Family::Exponential: return -std::log(q) / p1_;
    case Family::Gamma: return boost::math::gamma_q_inv(p1_, q) / p2_;
    case Family::Uniform: return p2_ - q * (p2_ - p1_);
    case Family::Deterministic: return p1_;
    case Family::LogNormal:
      return std::exp(p1_ + p2_ * kSqrt2 * boost::math::erfc_inv(2.0 * q));
    case Family::Weibull: return p2_ * std::pow(-std::log(q), 1.0 / p1_);
    case Family::Pareto: return p2_ * std::pow(q, -1.0 / p1_);
  }
  return 0.0;
}

double DistributionSpec::base_mean() const {
  switch (family_) {
    case Family::Exponential: return 1.0 / p1_;
    case Family::Gamma: return p1_ / p2_;
    case Family::Uniform: return 0.5 * (p1_ + p2_);
    case Family::Deterministic: return p1_;
    case Family::LogNormal: return std::exp(p1_ + 0.5 * p2_ * p2_);
    case Family::Weibull: return p2_ * std::tgamma(1.0 + 1.0 / p1_);
    case Family::Pareto: return p1_ * p2_ / (p1_ - 1.0);
  }
  return 0.0;
}

double DistributionSpec::base_integrated_tail(double h) const {
  if (h <= 0) return base_mean() - h;
  switch (family_) {
    case Family::Exponential: return std::exp(-p1_ * h) / p1_;
    case Family::Gamma: {
      // E[(Z-h)^+] = ((k - x) Q(k, x) + x^k e^{-x} / Gamma(k)) / rate, x = rate h
      const double x = p2_ * h;
      const double q = boost::math::gamma_q(p1_, x);
      const double d = x * boost::math::gamma_p_derivative(p1_, x);
      return std::max(0.0, ((p1_ - x) * q + d) / p2_);
    }
    case Family::Uniform: {
      const double w = p2_ - p1_;
      if (h < p1_) return (p1_ - h) + 0.5 * w;
      if (h < p2_) return (p2_ - h) * (p2_ - h) / (2.0 * w);
      return 0.0;
    }
    case Family::Deterministic: return std::max(p1_ - h, 0.0);
    case Family::LogNormal: {
      const double d2 = (p1_ - std::log(h)) / p2_;
      const double closed = base_mean() * normal_cdf(d2 + p2_) - h * normal_cdf(d2);
      if (d2 > -3.0) return std::max(0.0, closed);
      // Deep in the tail the closed form cancels; integrate the tail directly.
      return integrate_to_infinity([this](double v) { return base_tail(v); }, h);
    }
    case Family::Weibull: {
      const double k = p1_;
      return p2_ * std::tgamma(1.0 + 1.0 / k) *
             boost::math::gamma_q(1.0 / k, std::pow(h / p2_, k));
    }
    case Family::Pareto: {
      const double a = p1_;
      const double xm = p2_;
      if (h < xm) return (xm - h) + xm / (a - 1.0);
      return xm * std::pow(xm / h, a - 1.0) / (a - 1.0);
    }
  }
  return 0.0;
}

double DistributionSpec::base_log_mgf(double theta) const {
  if (theta == 0.0) return 0.0;
  switch (family_) {
    case Family::Exponential:
      return theta < p1_ ? -std::log1p(-theta / p1_) : kInf;
    case Family::Gamma:
      return theta < p2_ ? -p1_ * std::log1p(-theta / p2_) : kInf;
    case Family::Uniform: {
      const double x = theta * (p2_ - p1_);
      const double ratio = std::abs(x) < 1e-8 ? 1.0 + 0.5 * x : std::expm1(x) / x;
      return theta * p1_ + std::log(ratio);
    }
    case Family::Deterministic: return theta * p1_;
    case Family::Weibull:
      if (p1_ == 1.0) return theta < 1.0 / p2_ ? -std::log1p(-theta * p2_) : kInf;
      if (theta > 0 && p1_ < 1.0) return kInf;
      break;
    case Family::LogNormal:
    case Family::Pareto:
      if (theta > 0) return kInf;
      break;
  }
  if (theta < 0) {
    // E e^{theta Z} = int_0^inf e^{-y} F(y / |theta|) dy
    const double a = -theta;
    const double start = family_ == Family::Pareto ? p2_ * a : 0.0;
    const double m =
        integrate_to_infinity([&](double y) { return exp_times(-y, base_cdf(y / a)); }, start);
    return std::log(m);
  }
  // Light-tailed Weibull with shape > 1: E e^{theta Z} = 1 + theta int e^{theta z} P(Z > z) dz.
  const double m =
      1.0 + theta * integrate_to_infinity(
                        [&](double z) { return exp_times(theta * z, base_tail(z)); }, 0.0);
  return std::log(m);
}

// ---------------------------------------------------------------------------
// scaled interface

double DistributionSpec::cdf(double x) const { return base_cdf(x * scale_); }
double DistributionSpec::tail(double x) const { return base_tail(x * scale_); }
double DistributionSpec::quantile(double p) const { return base_quantile(p) / scale_; }
double DistributionSpec::tail_quantile(double q) const { return base_tail_quantile(q) / scale_; }
double DistributionSpec::mean() const { return base_mean() / scale_; }

double DistributionSpec::variance() const {
  double v = 0.0;
  switch (family_) {
    case Family::Exponential: v = 1.0 / (p1_ * p1_); break;
    case Family::Gamma: v = p1_ / (p2_ * p2_); break;
    case Family::Uniform: v = (p2_ - p1_) * (p2_ - p1_) / 12.0; break;
    case Family::Deterministic: v = 0.0; break;
    case Family::LogNormal:
      v = std::expm1(p2_ * p2_) * std::exp(2.0 * p1_ + p2_ * p2_);
      break;
    case Family::Weibull: {
      const double g1 = std::tgamma(1.0 + 1.0 / p1_);
      v = p2_ * p2_ * (std::tgamma(1.0 + 2.0 / p1_) - g1 * g1);
      break;
    }
    case Family::Pareto:
      v = p1_ > 2.0 ? p2_ * p2_ * p1_ / ((p1_ - 1.0) * (p1_ - 1.0) * (p1_ - 2.0)) : kInf;
      break;
  }
  return v / (scale_ * scale_);
}

double DistributionSpec::integrated_tail(double h) const {
  return base_integrated_tail(h * scale_) / scale_;
}

double DistributionSpec::log_mgf(double theta) const { return base_log_mgf(theta / scale_); }

bool DistributionSpec::has_exponential_moment() const {
  switch (family_) {
    case Family::LogNormal:
    case Family::Pareto: return false;
    case Family::Weibull: return p1_ >= 1.0;
    default: return true;
  }
}

double DistributionSpec::truncated_log_mgf(double b, double theta) const {
  if (theta == 0.0) return 0.0;
  if (family_ == Family::Deterministic) return theta * std::min(p1_ / scale_, b);
  std::vector<double> cuts = {0.0};
  auto add_cut = [&](double c) {
    if (c > 0 && c < b) cuts.push_back(c);
  };
  if (family_ == Family::Pareto) add_cut(p2_ / scale_);
  if (family_ == Family::Uniform) {
    add_cut(p1_ / scale_);
    add_cut(p2_ / scale_);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double m = 0.0;
  if (theta < 0) {
    // E e^{theta (X^b)} = e^{theta b} + |theta| int_0^b e^{theta x} F(x) dx
    m = std::exp(theta * b);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      m += -theta * integrate_finite([&](double x) { return std::exp(theta * x) * cdf(x); },
                                     cuts[i], cuts[i + 1]);
    }
  } else {
    m = 1.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      m += theta * integrate_finite([&](double x) { return std::exp(theta * x) * tail(x); },
                                    cuts[i], cuts[i + 1]);
    }
  }
  return std::log(m);
}

// ---------------------------------------------------------------------------
// sampling

double sample(const DistributionSpec& spec, RngStream& stream) {
  const double u = stream.next_uniform();
  if (spec.family() == Family::Gamma && spec.p1() == std::floor(spec.p1()) && spec.p1() <= 32) {
    double log_sum = std::log(u);
    for (int i = 1; i < static_cast<int>(spec.p1()); ++i) log_sum += std::log(stream.next_uniform());
    return -log_sum / (spec.p2() * spec.scale());
  }
  return spec.tail_quantile(u);
}

double sample_conditional(const DistributionSpec& spec, double a, double b, RngStream& stream) {
  if (!(a < b)) throw Error(ErrorCode::ZeroMassInterval, "empty interval");
  if (spec.family() == Family::Deterministic) {
    const double c = spec.quantile(0.5);
    if (a < c && c <= b) return c;
    throw Error(ErrorCode::ZeroMassInterval, "deterministic value outside (a, b]");
  }
  const double u = stream.next_uniform();
  double x = 0.0;
  if (spec.cdf(a) > 0.5) {
    const double qa = spec.tail(a);
    const double qb = std::isinf(b) ? 0.0 : spec.tail(b);
    const double mass = qa - qb;
    if (!(mass > 0)) throw Error(ErrorCode::ZeroMassInterval, "no mass on (a, b]");
    x = spec.tail_quantile(qb + u * mass);
  } else {
    const double pa = spec.cdf(a);
    const double pb = std::isinf(b) ? 1.0 : spec.cdf(b);
    const double mass = pb - pa;
    if (!(mass > 0)) throw Error(ErrorCode::ZeroMassInterval, "no mass on (a, b]");
    x = spec.quantile(pa + u * mass);
  }
  // Inversion round-off can land a hair outside the interval.
  if (!(x > a)) x = std::nextafter(a, kInf);
  if (x > b) x = b;
  return x;
}

double sample_equilibrium(const DistributionSpec& spec, RngStream& stream) {
  switch (spec.family()) {
    case Family::Exponential: return sample(spec, stream);
    case Family::Deterministic: return stream.next_uniform() * spec.mean();
    default: break;
  }
  // Solve integrated_tail(x) = u * mean, i.e. G_eq(x) = 1 - u.
  const double target = stream.next_uniform() * spec.mean();
  double lo = 0.0;
  double hi = spec.mean();
  while (spec.integrated_tail(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw Error(ErrorCode::IterationCap, "equilibrium bracket overflow");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo <= 1e-12 * std::max(1.0, hi)) break;
    if (spec.integrated_tail(mid) > target) lo = mid; else hi = mid;
  }
  return std::max(0.5 * (lo + hi), std::numeric_limits<double>::min());
}

namespace {

// Tilted law for theta > 0 without a closed form: invert its tail by bisection.
double sample_tilted_by_inversion(const DistributionSpec& spec, double theta, RngStream& stream) {
  const double mgf = std::exp(spec.log_mgf(theta));
  auto tilted_tail = [&](double x) {
    const double rest = integrate_to_infinity(
        [&](double y) { return exp_times(theta * y, spec.tail(y)); }, x);
    return (std::exp(theta * x) * spec.tail(x) + theta * rest) / mgf;
  };
  const double u = stream.next_uniform();
  double lo = 0.0;
  double hi = spec.mean();
  while (tilted_tail(hi) > u) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tilted_tail(mid) > u) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double sample_tilted(const DistributionSpec& spec, double theta, RngStream& stream) {
  if (theta == 0.0) return sample(spec, stream);
  if (!std::isfinite(spec.log_mgf(theta))) {
    throw Error(ErrorCode::DivergentTilt, "moment generating function diverges at theta");
  }
  const double s = spec.scale();
  switch (spec.family()) {
    case Family::Exponential:
      return sample(DistributionSpec::exponential(spec.p1() - theta / s).scaled(s), stream);
    case Family::Gamma:
      return sample(DistributionSpec::gamma(spec.p1(), spec.p2() - theta / s).scaled(s), stream);
    case Family::Uniform: {
      const double lo = spec.p1() / s;
      const double w = (spec.p2() - spec.p1()) / s;
      const double u = stream.next_uniform();
      if (std::abs(theta * w) < 1e-12) return lo + u * w;
      return lo + std::log1p(u * std::expm1(theta * w)) / theta;
    }
    case Family::Deterministic: return spec.mean();
    default: break;
  }
  if (theta > 0) return sample_tilted_by_inversion(spec, theta, stream);
  // theta < 0: the density ratio e^{theta x} is at most one.
  for (long it = 0; it < 10'000'000; ++it) {
    const double x = sample(spec, stream);
    if (stream.next_uniform() <= std::exp(theta * x)) return x;
  }
  throw Error(ErrorCode::IterationCap, "tilted rejection sampler did not accept");
}

// ---------------------------------------------------------------------------
// tilt roots

double walk_log_mgf(const DistributionSpec& spec, double slope, double theta,
                    std::optional<double> truncation_b) {
  const double x_part =
      truncation_b ? spec.truncated_log_mgf(*truncation_b, -theta) : spec.log_mgf(-theta);
  return theta * slope + x_part;
}

namespace {

double solve_walk_root(const DistributionSpec& spec, double slope, std::optional<double> b,
                       double mu) {
  auto psi = [&](double t) { return walk_log_mgf(spec, slope, t, b); };
  double lo = 0.0;
  double hi = 1.0 / mu;
  while (!(psi(hi) > 0)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) {
      throw Error(ErrorCode::NoRoot,
                  "no positive tilt root for the arrival walk; reduce epsilon or use "
                  "non-degenerate interarrival times");
    }
  }
  double best = hi;
  double best_val = std::abs(psi(hi));
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = psi(mid);
    if (std::abs(v) < best_val) {
      best = mid;
      best_val = std::abs(v);
    }
    if (v > 0) hi = mid; else lo = mid;
    if (best_val <= 1e-13) break;
  }
  if (best_val > 1e-10) throw Error(ErrorCode::NoRoot, "tilt root not resolved to 1e-10");
  return best;
}

void check_walk_inputs(const DistributionSpec& spec, double mu, double epsilon) {
  if (!(epsilon > 0 && epsilon < mu)) {
    throw Error(ErrorCode::InvalidModel, "epsilon must lie in (0, mu)");
  }
  if (spec.is_degenerate()) {
    throw Error(ErrorCode::NoRoot,
                "deterministic interarrival times give a degenerate walk without a tilt "
                "root; use a non-degenerate interarrival law");
  }
}

}  // namespace

double solve_eta(const DistributionSpec& spec, double mu, double epsilon) {
  check_walk_inputs(spec, mu, epsilon);
  return solve_walk_root(spec, mu - epsilon, std::nullopt, mu);
}

TiltContext make_tilt_context(const DistributionSpec& spec, double mu, double epsilon) {
  TiltContext ctx;
  ctx.mu = mu;
  ctx.epsilon = epsilon;
  ctx.eta = solve_eta(spec, mu, epsilon);
  return ctx;
}

TiltContext solve_truncation(const DistributionSpec& spec, double mu, double epsilon) {
  check_walk_inputs(spec, mu, epsilon);
  // E[min(X, b)] = E X - integrated_tail(b); want it equal to mu - epsilon / 2.
  const double target = spec.mean() - (mu - 0.5 * epsilon);
  if (!(target > 0)) throw Error(ErrorCode::InvalidModel, "mu - epsilon/2 exceeds E X");
  double lo = 0.0;
  double hi = spec.mean();
  double prev = spec.integrated_tail(lo);
  while (spec.integrated_tail(hi) > target) {
    const double cur = spec.integrated_tail(hi);
    if (cur > prev) throw Error(ErrorCode::GuardViolation, "truncated mean not monotone in b");
    prev = cur;
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw Error(ErrorCode::NoRoot, "truncation bracket overflow");
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (spec.integrated_tail(mid) > target) lo = mid; else hi = mid;
  }
  const double b = 0.5 * (lo + hi);
  TiltContext ctx;
  ctx.mu = mu;
  ctx.epsilon = epsilon;
  ctx.truncation_b = b;
  ctx.epsilon_prime = 0.5 * epsilon;
  ctx.eta = solve_walk_root(spec, mu - epsilon, b, mu);
  return ctx;
}

}  // namespace perfsamp
