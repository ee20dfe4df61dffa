#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "perfsamp/rng.hpp"

namespace perfsamp {

enum class Family { Exponential, Gamma, Uniform, Deterministic, LogNormal, Weibull, Pareto };

std::string_view to_string(Family family) noexcept;
std::optional<Family> family_from_string(std::string_view name) noexcept;

/// A positive random variable X = Z / scale where Z belongs to one of the
/// supported families. Parameters refer to Z:
///
///   Exponential   rate
///   Gamma         shape, rate        (integer shape gives Erlang)
///   Uniform       low, high          (0 <= low < high)
///   Deterministic value
///   LogNormal     mu, sigma          (parameters of log Z)
///   Weibull       shape, scale
///   Pareto        alpha, xm          (alpha > 1)
///
/// All evaluation methods account for the scale divisor, so downstream code
/// works in the scaled time units only.
class DistributionSpec {
 public:
  static DistributionSpec exponential(double rate);
  static DistributionSpec gamma(double shape, double rate);
  static DistributionSpec erlang(int phases, double rate);
  static DistributionSpec uniform(double low, double high);
  static DistributionSpec deterministic(double value);
  static DistributionSpec lognormal(double mu, double sigma);
  static DistributionSpec weibull(double shape, double scale);
  static DistributionSpec pareto(double alpha, double xm);

  /// Same family with the scale divisor multiplied by `divisor`.
  DistributionSpec scaled(double divisor) const;

  Family family() const noexcept { return family_; }
  double p1() const noexcept { return p1_; }
  double p2() const noexcept { return p2_; }
  double scale() const noexcept { return scale_; }

  double cdf(double x) const;
  /// 1 - F(x), evaluated without cancellation.
  double tail(double x) const;
  double quantile(double p) const;
  /// x with tail(x) = q; accurate for small q.
  double tail_quantile(double q) const;
  double mean() const;
  double variance() const;

  /// int_h^inf (1 - F(v)) dv = E[(X - h)^+].
  double integrated_tail(double h) const;

  /// log E exp(theta X), or +inf when the moment generating function diverges.
  double log_mgf(double theta) const;

  /// log E exp(theta min(X, b)); finite for every theta.
  double truncated_log_mgf(double b, double theta) const;
  double truncated_mean(double b) const { return mean() - integrated_tail(b); }

  /// True when E exp(theta X) < inf for some theta > 0.
  bool has_exponential_moment() const;
  bool is_degenerate() const noexcept { return family_ == Family::Deterministic; }

  std::string describe() const;

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;

 private:
  DistributionSpec(Family family, double p1, double p2) : family_(family), p1_(p1), p2_(p2) {}

  // Unscaled variable Z.
  double base_cdf(double z) const;
  double base_tail(double z) const;
  double base_quantile(double p) const;
  double base_tail_quantile(double q) const;
  double base_mean() const;
  double base_integrated_tail(double h) const;
  double base_log_mgf(double theta) const;

  Family family_;
  double p1_;
  double p2_;
  double scale_ = 1.0;
};

/// Shorthand for spec.cdf(x).
inline double eval_cdf(const DistributionSpec& spec, double x) { return spec.cdf(x); }

double sample(const DistributionSpec& spec, RngStream& stream);

/// Draw from F restricted to (a, b]; b may be +inf. Throws ZeroMassInterval
/// when the interval carries no probability.
double sample_conditional(const DistributionSpec& spec, double a, double b, RngStream& stream);

/// Draw from the equilibrium (stationary age) law with density (1 - F(t)) / E X.
double sample_equilibrium(const DistributionSpec& spec, RngStream& stream);

/// Draw from the exponentially tilted law dF_theta proportional to e^{theta x} dF.
/// Throws DivergentTilt when the moment generating function is infinite at theta.
double sample_tilted(const DistributionSpec& spec, double theta, RngStream& stream);

/// Parameters of the negative-drift walk Y = (mu - epsilon) - X used to
/// certify the arrival sequence, together with its tilt root.
struct TiltContext {
  double mu = 0.0;
  double epsilon = 0.0;
  double eta = 0.0;
  std::optional<double> truncation_b;
  std::optional<double> epsilon_prime;

  double slope() const noexcept { return mu - epsilon; }
  bool truncated() const noexcept { return truncation_b.has_value(); }
};

/// log E exp(theta Y) for Y = slope - X, or slope - min(X, b) when b is given.
double walk_log_mgf(const DistributionSpec& spec, double slope, double theta,
                    std::optional<double> truncation_b = std::nullopt);

/// Positive root eta of theta (mu - epsilon) + log E exp(-theta X) = 0.
/// Throws NoRoot when no sign change is found up to eta = 1e6.
double solve_eta(const DistributionSpec& spec, double mu, double epsilon);

/// Chooses b with E[min(X, b)] = mu - epsilon / 2 and solves the tilt root of
/// the truncated walk. The returned context has epsilon_prime = epsilon / 2.
TiltContext solve_truncation(const DistributionSpec& spec, double mu, double epsilon);

/// Light-tailed arrivals: the plain tilt root for the walk.
TiltContext make_tilt_context(const DistributionSpec& spec, double mu, double epsilon);

}  // namespace perfsamp
