#include "perfsamp/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "perfsamp/error.hpp"

namespace perfsamp {

ErlangB erlang_b_distribution(int capacity, double offered_load) {
  if (capacity < 0 || !(offered_load > 0)) {
    throw Error(ErrorCode::InvalidModel, "erlang_b needs C >= 0 and a > 0");
  }
  ErlangB out;
  out.pmf.resize(static_cast<std::size_t>(capacity) + 1);
  // Work with terms relative to the largest one to avoid overflow.
  std::vector<double> log_terms(out.pmf.size());
  for (int k = 0; k <= capacity; ++k) {
    log_terms[k] = k * std::log(offered_load) - std::lgamma(k + 1.0);
  }
  const double top = *std::max_element(log_terms.begin(), log_terms.end());
  double total = 0.0;
  for (std::size_t k = 0; k < out.pmf.size(); ++k) {
    out.pmf[k] = std::exp(log_terms[k] - top);
    total += out.pmf[k];
  }
  for (double& p : out.pmf) p /= total;
  out.blocking = erlang_b(capacity, offered_load);
  return out;
}

double erlang_b(int capacity, double offered_load) {
  double b = 1.0;
  for (int k = 1; k <= capacity; ++k) b = offered_load * b / (k + offered_load * b);
  return b;
}

std::vector<ProductFormState> product_form_distribution(
    const std::vector<std::vector<int>>& incidence, const std::vector<int>& capacities,
    const std::vector<double>& loads, std::size_t max_states) {
  const std::size_t routes = incidence.size();
  const std::size_t stations = capacities.size();
  if (loads.size() != routes) throw Error(ErrorCode::InvalidModel, "one load per route");
  // Each route's count is bounded by the smallest capacity on its path.
  std::vector<int> bound(routes, 0);
  for (std::size_t l = 0; l < routes; ++l) {
    int b = -1;
    for (std::size_t j = 0; j < stations; ++j) {
      if (incidence[l][j] != 0) b = b < 0 ? capacities[j] : std::min(b, capacities[j]);
    }
    if (b < 0) throw Error(ErrorCode::InvalidModel, "route visits no station");
    bound[l] = b;
  }
  std::vector<ProductFormState> states;
  std::vector<int> n(routes, 0);
  std::vector<int> load(stations, 0);
  double total = 0.0;
  std::function<void(std::size_t, double)> visit = [&](std::size_t l, double log_weight) {
    if (l == routes) {
      if (states.size() >= max_states) {
        throw Error(ErrorCode::StateSpaceTooLarge, "feasible set exceeds the enumeration limit");
      }
      states.push_back({n, log_weight});
      return;
    }
    for (int k = 0; k <= bound[l]; ++k) {
      bool ok = true;
      for (std::size_t j = 0; j < stations; ++j) {
        if (incidence[l][j] != 0 && load[j] + k > capacities[j]) ok = false;
      }
      if (!ok) break;
      for (std::size_t j = 0; j < stations; ++j) load[j] += incidence[l][j] * k;
      n[l] = k;
      visit(l + 1, log_weight + k * std::log(loads[l]) - std::lgamma(k + 1.0));
      for (std::size_t j = 0; j < stations; ++j) load[j] -= incidence[l][j] * k;
    }
    n[l] = 0;
  };
  visit(0, 0.0);
  double top = -INFINITY;
  for (const auto& s : states) top = std::max(top, s.probability);
  for (auto& s : states) {
    s.probability = std::exp(s.probability - top);
    total += s.probability;
  }
  for (auto& s : states) s.probability /= total;
  return states;
}

std::vector<double> poisson_pmf_with_tail(double mean, int k_max) {
  std::vector<double> pmf(static_cast<std::size_t>(k_max));
  for (int k = 0; k + 1 < k_max; ++k) {
    pmf[k] = std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
  }
  // P(N >= k_max - 1) = P(k_max - 1, mean), the regularized lower gamma
  pmf[k_max - 1] = k_max > 1 ? boost::math::gamma_p(static_cast<double>(k_max - 1), mean) : 1.0;
  return pmf;
}

double chi_square_sf(double statistic, int dof) {
  if (dof <= 0) return 1.0;
  if (statistic <= 0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

GofReport chi_square_test(const std::vector<double>& observed, const std::vector<double>& pmf) {
  GofReport report;
  report.test = "chi-square";
  if (pmf.empty()) throw Error(ErrorCode::DegenerateBinning, "empty pmf");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  std::vector<double> obs(pmf.size(), 0.0);
  for (std::size_t k = 0; k < observed.size(); ++k) obs[std::min(k, pmf.size() - 1)] += observed[k];

  struct Range {
    std::size_t first;
    std::size_t last;
    double observed;
    double expected;
  };
  std::vector<Range> ranges;
  Range cur{0, 0, 0.0, 0.0};
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    cur.last = k;
    cur.observed += obs[k];
    cur.expected += pmf[k] * total;
    if (cur.expected >= 5.0) {
      ranges.push_back(cur);
      cur = Range{k + 1, k + 1, 0.0, 0.0};
    }
  }
  if (cur.first < pmf.size()) {
    if (ranges.empty()) {
      ranges.push_back(cur);
    } else {
      ranges.back().last = cur.last;
      ranges.back().observed += cur.observed;
      ranges.back().expected += cur.expected;
    }
  }
  if (ranges.size() < 2) {
    throw Error(ErrorCode::DegenerateBinning, "fewer than two bins after pooling");
  }
  std::size_t pooled = 0;
  for (const auto& r : ranges) {
    pooled += r.last - r.first;
    std::ostringstream label;
    label << r.first;
    if (r.last + 1 == pmf.size()) label << "+";
    else if (r.last != r.first) label << "-" << r.last;
    report.bins.push_back({label.str(), r.observed, r.expected});
    const double d = r.observed - r.expected;
    report.statistic += d * d / r.expected;
  }
  report.dof = static_cast<int>(ranges.size()) - 1;
  report.p_value = chi_square_sf(report.statistic, report.dof);
  std::ostringstream note;
  note << pooled << " categories merged into neighbours so every bin expects at least 5";
  report.pooling_note = note.str();
  return report;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0) return 1.0;
  constexpr double pi = 3.14159265358979323846;
  if (lambda < 1.0) {
    // Theta-function form converges fast for small lambda.
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double t = (2 * k - 1) * pi / lambda;
      s += std::exp(-t * t / 8.0);
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsReport ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  KsReport r;
  r.n = sample.size();
  if (sample.empty()) return r;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  r.statistic = d;
  const double rn = std::sqrt(n);
  r.p_value = kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
  return r;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  const std::size_t n = std::max(p.size(), q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    s += std::abs(a - b);
  }
  return 0.5 * s;
}

std::vector<double> empirical_pmf(const std::vector<int>& values, std::size_t size) {
  std::size_t n = size;
  for (int v : values) n = std::max(n, static_cast<std::size_t>(v) + 1);
  std::vector<double> pmf(n, 0.0);
  for (int v : values) pmf[static_cast<std::size_t>(v)] += 1.0;
  if (!values.empty()) {
    for (double& p : pmf) p /= static_cast<double>(values.size());
  }
  return pmf;
}

MeanCi mean_confidence_interval(const std::vector<double>& values, double level) {
  MeanCi ci;
  ci.n = values.size();
  if (values.empty()) return ci;
  ci.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (values.size() < 2) return ci;
  double ss = 0.0;
  for (double v : values) ss += (v - ci.mean) * (v - ci.mean);
  const double sd = std::sqrt(ss / (values.size() - 1));
  ci.std_error = sd / std::sqrt(static_cast<double>(values.size()));
  boost::math::students_t t(static_cast<double>(values.size() - 1));
  ci.half_width = boost::math::quantile(t, 0.5 + 0.5 * level) * ci.std_error;
  return ci;
}

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace perfsamp
